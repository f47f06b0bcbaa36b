use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{summarize, KppReport};
use crate::detection::{CraterDetection, Method};
use crate::error::{Error, Result};
use crate::landmarks::db_from_scene;
use crate::lidar::{detect_lidar, LidarDetectorConfig};
use crate::localizer::RoverState;
use crate::pose::{dist2, Pose2};
use crate::sensor::{simulate_lidar, simulate_stereo, LidarConfig, StereoConfig};
use crate::stereo::{detect_stereo, StereoDetectorConfig};
use crate::terrain::{synthesize_scene, CraterSpec, SceneParams, SceneTruth, DEFAULT_CELL_SIZE, DEFAULT_ROUGHNESS};

/// Diameters x near-rim ranges to evaluate. Each (diameter, range) cell runs
/// `seeds_per_cell` trials, cycling through the approach angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub diameters_m: Vec<f64>,
    pub ranges_m: Vec<f64>,
    pub approach_deg: Vec<f64>,
    pub seeds_per_cell: usize,
}

pub const PRESETS: &[&str] = &["dense", "kpp"];

impl SweepGrid {
    /// Named grids: `dense` is 7 diameters x ranges 5..=20 m at 1 m x 4
    /// approaches; `kpp` is 5/10/15/20 m craters at 5 to 25 m in 5 m steps,
    /// the grid behind the default measurement model.
    pub fn preset(name: &str, seeds_per_cell: usize) -> Result<Self> {
        let approach_deg = vec![0.0, 90.0, 180.0, 270.0];
        let grid = match name {
            "dense" => Self {
                diameters_m: vec![5.0, 7.0, 10.0, 12.0, 15.0, 17.0, 20.0],
                ranges_m: (5..=20).map(f64::from).collect(),
                approach_deg,
                seeds_per_cell,
            },
            "kpp" => Self {
                diameters_m: vec![5.0, 10.0, 15.0, 20.0],
                ranges_m: vec![5.0, 10.0, 15.0, 20.0, 25.0],
                approach_deg,
                seeds_per_cell,
            },
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown sweep preset {other:?}; expected one of {PRESETS:?}"
                )))
            }
        };
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = !self.diameters_m.is_empty()
            && !self.ranges_m.is_empty()
            && !self.approach_deg.is_empty()
            && self.seeds_per_cell > 0
            && self.diameters_m.iter().all(|d| d.is_finite() && *d > 0.0)
            && self.ranges_m.iter().all(|r| r.is_finite() && *r > 0.0)
            && self.approach_deg.iter().all(|a| a.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid sweep grid {self:?}")))
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.diameters_m.iter().flat_map(|&d| self.ranges_m.iter().map(move |&r| (d, r)))
    }

    pub fn trial_count(&self) -> usize {
        self.diameters_m.len() * self.ranges_m.len() * self.seeds_per_cell
    }
}

/// Scene, sensor and detector settings shared by every trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub cell_size_m: f64,
    pub roughness_m: f64,
    /// Terrain kept beyond the crater and the rover on every side.
    pub margin_m: f64,
    /// Prior position sigma handed to the LIDAR detector.
    pub prior_sigma_m: f64,
    /// Near-rim ranges pooled into each diameter's position error.
    pub sigma_ranges_m: (f64, f64),
    pub lidar: LidarConfig,
    pub lidar_detector: LidarDetectorConfig,
    pub stereo: StereoConfig,
    pub stereo_detector: StereoDetectorConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            cell_size_m: DEFAULT_CELL_SIZE,
            roughness_m: DEFAULT_ROUGHNESS,
            margin_m: 8.0,
            prior_sigma_m: 1.0,
            sigma_ranges_m: (15.0, 20.0),
            lidar: LidarConfig::default(),
            lidar_detector: LidarDetectorConfig::default(),
            stereo: StereoConfig::default(),
            stereo_detector: StereoDetectorConfig::default(),
        }
    }
}

/// One simulated approach. Errors are detection minus truth, present only
/// for true positives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub diameter_m: f64,
    pub range_m: f64,
    pub approach_deg: f64,
    pub seed: u64,
    pub detected: bool,
    pub err_x_m: Option<f64>,
    pub err_y_m: Option<f64>,
}

/// Detections within this distance of the true centre count as correct.
pub fn true_positive_radius(diameter: f64) -> f64 {
    (0.25 * diameter).max(1.0)
}

/// Per-trial seed from the master seed and the trial's position in the grid.
pub fn trial_seed(master: u64, cell: usize, k: usize) -> u64 {
    let mut z = master ^ ((cell as u64) << 32) ^ k as u64;
    // splitmix64 finalizer
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The single-crater scene of one trial: crater at the origin, rover `range`
/// short of its near rim looking along `approach_deg`.
pub fn trial_scene(diameter: f64, range: f64, approach_deg: f64, seed: u64, cfg: &SweepConfig) -> Result<SceneTruth> {
    let a = approach_deg.to_radians();
    let dist = range + 0.5 * diameter;
    let pose = Pose2::new(-dist * a.cos(), -dist * a.sin(), a);
    let extent = 2.0 * (dist + cfg.margin_m);
    synthesize_scene(
        &SceneParams::new(vec![CraterSpec::new(1, [0.0, 0.0], diameter)], extent, cfg.cell_size_m, cfg.roughness_m, seed)
            .with_rover_pose(pose),
    )
}

/// Runs one detector on one scene and returns its detections.
pub fn detect_in_scene(detector: Method, scene: &SceneTruth, cfg: &SweepConfig, seed: u64) -> Result<Vec<CraterDetection>> {
    let pose = scene.rover_pose;
    match detector {
        Method::Lidar => {
            let cloud = simulate_lidar(scene, &cfg.lidar, seed)?;
            let db = db_from_scene(scene, 0.0, seed);
            let prior = RoverState::new(pose.position(), pose.heading, cfg.prior_sigma_m);
            detect_lidar(&cloud, &prior, &db, &cfg.lidar_detector)
        }
        Method::Stereo => {
            let (dmap, _) = simulate_stereo(scene, &cfg.stereo, seed)?;
            detect_stereo(&dmap, &pose, &cfg.stereo_detector)
        }
    }
}

/// Scores detections against a crater at `truth`: the nearest detection
/// inside the true-positive radius, if any.
pub fn score_trial(detections: &[CraterDetection], truth: [f64; 2], diameter: f64) -> Option<[f64; 2]> {
    detections
        .iter()
        .map(|d| (dist2(d.center_xy, truth), d))
        .filter(|(r, _)| *r <= true_positive_radius(diameter))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, d)| [d.center_xy[0] - truth[0], d.center_xy[1] - truth[1]])
}

pub fn run_trial(detector: Method, diameter: f64, range: f64, approach_deg: f64, seed: u64, cfg: &SweepConfig) -> Trial {
    // failures anywhere in the chain count as misses
    let err = trial_scene(diameter, range, approach_deg, seed, cfg)
        .and_then(|scene| detect_in_scene(detector, &scene, cfg, seed ^ 0x5EED))
        .ok()
        .and_then(|dets| score_trial(&dets, [0.0, 0.0], diameter));
    Trial {
        diameter_m: diameter,
        range_m: range,
        approach_deg,
        seed,
        detected: err.is_some(),
        err_x_m: err.map(|e| e[0]),
        err_y_m: err.map(|e| e[1]),
    }
}

/// Every trial of the grid, in grid order. Scenes depend only on the master
/// seed and the trial's place in the grid, so LIDAR and stereo sweeps with
/// the same inputs see identical terrain.
pub fn run_trials(detector: Method, grid: &SweepGrid, cfg: &SweepConfig, seed: u64) -> Result<Vec<Trial>> {
    grid.validate()?;
    let jobs: Vec<(usize, f64, f64, usize)> = grid
        .cells()
        .enumerate()
        .flat_map(|(c, (d, r))| (0..grid.seeds_per_cell).map(move |k| (c, d, r, k)))
        .collect();
    Ok(jobs
        .into_par_iter()
        .map(|(c, d, r, k)| {
            let approach = grid.approach_deg[k % grid.approach_deg.len()];
            run_trial(detector, d, r, approach, trial_seed(seed, c, k), cfg)
        })
        .collect())
}

pub fn run_sweep(detector: Method, grid: &SweepGrid, cfg: &SweepConfig, seed: u64) -> Result<KppReport> {
    let trials = run_trials(detector, grid, cfg, seed)?;
    Ok(summarize(detector, grid, cfg.sigma_ranges_m, seed, trials))
}
