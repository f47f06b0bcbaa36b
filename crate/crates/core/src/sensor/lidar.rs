use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::trace::TerrainTracer;
use super::{level_to_site, sensor_position};
use crate::cloud::{Frame, PointCloud, Vec3};
use crate::error::{Error, Result};
use crate::terrain::SceneTruth;

/// Scanning LIDAR geometry. Angles in degrees.
///
/// Elevation rows are centred on `-tilt_deg`; with a 360 degree horizontal
/// field the azimuth columns start at the rover heading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarConfig {
    pub vertical_fov_deg: f64,
    pub horizontal_fov_deg: f64,
    pub vertical_res_deg: f64,
    pub horizontal_res_deg: f64,
    pub height_m: f64,
    pub tilt_deg: f64,
    pub range_noise_sigma_m: f64,
    pub max_range_m: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self {
            vertical_fov_deg: 75.0,
            horizontal_fov_deg: 360.0,
            vertical_res_deg: 0.333,
            horizontal_res_deg: 0.333,
            height_m: 1.5,
            tilt_deg: 23.0,
            range_noise_sigma_m: 0.02,
            max_range_m: 120.0,
        }
    }
}

impl LidarConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.vertical_res_deg > 0.0
            && self.horizontal_res_deg > 0.0
            && self.vertical_fov_deg > 0.0
            && self.vertical_fov_deg <= 360.0
            && self.horizontal_fov_deg > 0.0
            && self.horizontal_fov_deg <= 360.0
            && self.height_m > 0.0
            && self.range_noise_sigma_m >= 0.0
            && self.max_range_m > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid LIDAR configuration {self:?}")))
        }
    }

    pub fn elevations(&self) -> Vec<f64> {
        let n = (self.vertical_fov_deg / self.vertical_res_deg + 1e-9).floor() as usize + 1;
        let mid = 0.5 * (n - 1) as f64;
        (0..n)
            .map(|i| (-self.tilt_deg + (i as f64 - mid) * self.vertical_res_deg).to_radians())
            .collect()
    }

    pub fn azimuths(&self) -> Vec<f64> {
        if self.horizontal_fov_deg >= 360.0 {
            let n = (360.0 / self.horizontal_res_deg + 1e-9).floor() as usize;
            (0..n).map(|j| (j as f64 * self.horizontal_res_deg).to_radians()).collect()
        } else {
            let n = (self.horizontal_fov_deg / self.horizontal_res_deg + 1e-9).floor() as usize + 1;
            (0..n)
                .map(|j| (-0.5 * self.horizontal_fov_deg + j as f64 * self.horizontal_res_deg).to_radians())
                .collect()
        }
    }

    pub fn ray_count(&self) -> usize {
        self.elevations().len() * self.azimuths().len()
    }
}

/// Scans the scene from the rover pose. Returned points are in the sensor frame
/// with the sensor at the origin.
pub fn simulate_lidar(scene: &SceneTruth, cfg: &LidarConfig, seed: u64) -> Result<PointCloud> {
    cfg.validate()?;
    let origin = sensor_position(scene, cfg.height_m)?;
    let heading = scene.rover_pose.heading;
    let tracer = TerrainTracer::new(&scene.heightfield);
    let elevations = cfg.elevations();
    let azimuths = cfg.azimuths();

    let hits: Vec<(Vec3, f64)> = azimuths
        .par_iter()
        .flat_map_iter(|&az| {
            let tracer = &tracer;
            elevations.iter().filter_map(move |&el| {
                let level = Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin());
                let dir = level_to_site(&level, heading);
                tracer.cast(&origin, &dir, cfg.max_range_m).map(|t| (level, t))
            })
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, cfg.range_noise_sigma_m.max(0.0)).expect("finite sigma");
    let points = hits
        .into_iter()
        .map(|(dir, t)| {
            let r = if cfg.range_noise_sigma_m > 0.0 { t + noise.sample(&mut rng) } else { t };
            dir * r
        })
        .collect();
    Ok(PointCloud::new(points, Frame::Sensor, Vec3::zeros()))
}
