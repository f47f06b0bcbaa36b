//! One JSON document holding every tunable threshold of the pipeline.
//! Missing fields take their defaults; unknown fields are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detection::Method;
use crate::error::{Error, Result};
use crate::eval::SweepConfig;
use crate::landmarks::DEFAULT_MAP_NOISE;
use crate::lidar::LidarDetectorConfig;
use crate::localizer::{AssociationConfig, MeasurementModel, TraverseConfig};
use crate::sensor::{LidarConfig, StereoConfig};
use crate::stereo::StereoDetectorConfig;
use crate::terrain::{DEFAULT_CELL_SIZE, DEFAULT_ROUGHNESS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSettings {
    pub cell_size_m: f64,
    pub roughness_m: f64,
    /// Terrain kept beyond the crater and the rover on every side.
    pub margin_m: f64,
    /// Position noise of landmark records derived from a scene.
    pub map_sigma_m: f64,
}

impl Default for SceneSettings {
    fn default() -> Self {
        Self {
            cell_size_m: DEFAULT_CELL_SIZE,
            roughness_m: DEFAULT_ROUGHNESS,
            margin_m: 8.0,
            map_sigma_m: DEFAULT_MAP_NOISE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub prior_sigma_m: f64,
    pub sigma_ranges_m: (f64, f64),
}

impl Default for SweepSettings {
    fn default() -> Self {
        let s = SweepConfig::default();
        Self {
            prior_sigma_m: s.prior_sigma_m,
            sigma_ranges_m: s.sigma_ranges_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraverseSettings {
    pub step_m: f64,
    pub sense_every_m: f64,
    pub drift_fraction: f64,
    pub initial_sigma_m: f64,
    pub heading_sigma_deg: f64,
    pub scene_extent_m: f64,
    pub skip_without_landmarks: bool,
    pub retain_m: f64,
    pub craters_per_100m: f64,
    pub diameter_range_m: (f64, f64),
    pub cell_size_m: f64,
}

impl Default for TraverseSettings {
    fn default() -> Self {
        let t = TraverseConfig::default();
        Self {
            step_m: t.step_m,
            sense_every_m: t.sense_every_m,
            drift_fraction: t.drift_fraction,
            initial_sigma_m: t.initial_sigma_m,
            heading_sigma_deg: t.heading_sigma_deg,
            scene_extent_m: t.scene_extent_m,
            skip_without_landmarks: t.skip_without_landmarks,
            retain_m: t.retain_m,
            craters_per_100m: 4.0,
            diameter_range_m: (5.0, 20.0),
            cell_size_m: 0.1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub scene: SceneSettings,
    pub lidar: LidarConfig,
    pub lidar_detector: LidarDetectorConfig,
    pub stereo: StereoConfig,
    pub stereo_detector: StereoDetectorConfig,
    pub sweep: SweepSettings,
    pub traverse: TraverseSettings,
    pub association: AssociationConfig,
    pub measurement: MeasurementModel,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = Self::from_json(&text).map_err(|e| Error::json(path, e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.lidar.validate()?;
        self.lidar_detector.validate()?;
        self.stereo.validate()?;
        self.stereo_detector.validate()?;
        self.measurement.validate()?;
        let s = &self.scene;
        if !(s.cell_size_m > 0.0 && s.roughness_m >= 0.0 && s.margin_m >= 0.0 && s.map_sigma_m >= 0.0) {
            return Err(Error::InvalidConfig(format!("invalid scene settings {s:?}")));
        }
        let t = &self.traverse;
        if !(t.craters_per_100m >= 0.0 && t.diameter_range_m.0 > 0.0 && t.diameter_range_m.0 <= t.diameter_range_m.1 && t.cell_size_m > 0.0) {
            return Err(Error::InvalidConfig(format!("invalid traverse settings {t:?}")));
        }
        Ok(())
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            cell_size_m: self.scene.cell_size_m,
            roughness_m: self.scene.roughness_m,
            margin_m: self.scene.margin_m,
            prior_sigma_m: self.sweep.prior_sigma_m,
            sigma_ranges_m: self.sweep.sigma_ranges_m,
            lidar: self.lidar.clone(),
            lidar_detector: self.lidar_detector.clone(),
            stereo: self.stereo.clone(),
            stereo_detector: self.stereo_detector.clone(),
        }
    }

    pub fn traverse_config(&self, method: Method) -> TraverseConfig {
        let t = &self.traverse;
        TraverseConfig {
            step_m: t.step_m,
            sense_every_m: t.sense_every_m,
            drift_fraction: t.drift_fraction,
            initial_sigma_m: t.initial_sigma_m,
            heading_sigma_deg: t.heading_sigma_deg,
            method,
            scene_extent_m: t.scene_extent_m,
            skip_without_landmarks: t.skip_without_landmarks,
            retain_m: t.retain_m,
            lidar: self.lidar.clone(),
            lidar_detector: self.lidar_detector.clone(),
            stereo: self.stereo.clone(),
            stereo_detector: self.stereo_detector.clone(),
            association: self.association.clone(),
            measurement: self.measurement.clone(),
        }
    }
}
