use std::io::Write;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{associate_weighted, propagate, AssociationConfig, LandmarkBiasFilter, MeasurementModel, OdometrySegment, RoverState};
use crate::detection::{CraterDetection, Method};
use crate::error::{Error, Result};
use crate::landmarks::{LandmarkDb, LandmarkRecord};
use crate::lidar::{detect_lidar, LidarDetectorConfig};
use crate::pose::{dist2, Pose2};
use crate::sensor::{simulate_lidar, simulate_stereo, LidarConfig, StereoConfig};
use crate::stereo::{detect_stereo, StereoDetectorConfig};
use crate::terrain::{synthesize_scene, CraterSpec, SceneParams, SceneTruth};

/// Craters and background terrain for a traverse. Local scenes are cut from
/// it around the rover at each sensing step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraverseWorld {
    pub craters: Vec<CraterSpec>,
    pub roughness_m: f64,
    pub cell_size_m: f64,
    pub terrain_seed: u64,
}

impl TraverseWorld {
    /// Places `per_100m` craters per 100 m of route, alternating sides, with
    /// rims a few metres clear of the path.
    pub fn along_route(route: &[[f64; 2]], per_100m: f64, diameters: (f64, f64), seed: u64) -> Result<Self> {
        validate_route(route)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let length = route_length(route);
        let n = (length / 100.0 * per_100m).floor() as usize;
        let mut craters: Vec<CraterSpec> = Vec::with_capacity(n);
        for k in 0..n {
            let s = (k as f64 + 0.5) * length / n as f64;
            let (p, heading) = point_at(route, s);
            let d = rng.random_range(diameters.0..=diameters.1);
            let side = if k % 2 == 0 { 1.0 } else { -1.0 };
            let lateral = 0.5 * d + rng.random_range(4.0..8.0);
            let c = [
                p[0] - side * heading.sin() * lateral,
                p[1] + side * heading.cos() * lateral,
            ];
            let spec = CraterSpec::new(k as u64 + 1, c, d);
            let clear_of_route = distance_to_route(route, c) > 0.5 * d + 2.0;
            let clear_of_others = craters.iter().all(|o| dist2(o.center_xy, c) > o.radius() + spec.radius() + 1.0);
            if clear_of_route && clear_of_others {
                craters.push(spec);
            }
        }
        Ok(Self {
            craters,
            roughness_m: crate::terrain::DEFAULT_ROUGHNESS,
            cell_size_m: 0.1,
            terrain_seed: seed,
        })
    }

    /// Map of the world's craters, positions perturbed by `map_sigma` (m).
    pub fn landmark_db(&self, map_sigma: f64, seed: u64) -> LandmarkDb {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, map_sigma.max(0.0)).expect("finite sigma");
        let records = self
            .craters
            .iter()
            .map(|c| LandmarkRecord {
                id: c.id,
                x_m: c.center_xy[0] + noise.sample(&mut rng),
                y_m: c.center_xy[1] + noise.sample(&mut rng),
                diameter_m: c.diameter,
                depth_m: c.depth,
            })
            .collect();
        LandmarkDb::new(records).expect("world craters have unique ids and valid geometry")
    }

    /// Square scene of side `extent` around `pose`, holding the craters that
    /// fit inside it.
    pub fn local_scene(&self, pose: Pose2, extent: f64) -> Result<SceneTruth> {
        let half = 0.5 * extent;
        let craters: Vec<CraterSpec> = self
            .craters
            .iter()
            .filter(|c| {
                (c.center_xy[0] - pose.x).abs() + c.diameter <= half && (c.center_xy[1] - pose.y).abs() + c.diameter <= half
            })
            .cloned()
            .collect();
        synthesize_scene(
            &SceneParams::new(craters, extent, self.cell_size_m, self.roughness_m, self.terrain_seed)
                .with_center(pose.position())
                .with_rover_pose(pose),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraverseConfig {
    pub step_m: f64,
    pub sense_every_m: f64,
    pub drift_fraction: f64,
    pub initial_sigma_m: f64,
    pub heading_sigma_deg: f64,
    pub method: Method,
    /// Side of the local scene synthesized at each sensing step.
    pub scene_extent_m: f64,
    /// Skip sensing when no landmark is within reach of the estimate.
    pub skip_without_landmarks: bool,
    /// Travel over which unmatched detections stay available for association.
    pub retain_m: f64,
    pub lidar: LidarConfig,
    pub lidar_detector: LidarDetectorConfig,
    pub stereo: StereoConfig,
    pub stereo_detector: StereoDetectorConfig,
    pub association: AssociationConfig,
    pub measurement: MeasurementModel,
}

impl Default for TraverseConfig {
    fn default() -> Self {
        Self {
            step_m: 1.0,
            sense_every_m: 10.0,
            drift_fraction: 0.02,
            initial_sigma_m: 1.0,
            heading_sigma_deg: 0.1,
            method: Method::Lidar,
            scene_extent_m: 90.0,
            skip_without_landmarks: true,
            retain_m: 100.0,
            lidar: LidarConfig::default(),
            lidar_detector: LidarDetectorConfig::default(),
            stereo: StereoConfig::default(),
            stereo_detector: StereoDetectorConfig::default(),
            association: AssociationConfig::default(),
            measurement: MeasurementModel::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraverseStep {
    pub t: usize,
    pub distance_m: f64,
    pub truth_xy: [f64; 2],
    pub est_xy: [f64; 2],
    pub cov: [[f64; 2]; 2],
    pub sensed: bool,
    pub n_detections: usize,
    pub n_matches: usize,
    pub matched_ids: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TraverseStep {
    pub fn error_xy(&self) -> [f64; 2] {
        [self.est_xy[0] - self.truth_xy[0], self.est_xy[1] - self.truth_xy[1]]
    }

    /// Normalized estimation error squared; `None` for a singular covariance.
    pub fn nees(&self) -> Option<f64> {
        let [[a, b], [c, d]] = self.cov;
        let det = a * d - b * c;
        if !(det > 0.0) {
            return None;
        }
        let [ex, ey] = self.error_xy();
        Some((d * ex * ex - (b + c) * ex * ey + a * ey * ey) / det)
    }

    /// Three times the standard deviation along the worst axis.
    pub fn three_sigma(&self) -> f64 {
        let [[a, b], [_, d]] = self.cov;
        let m = 0.5 * (a + d);
        let r = (0.25 * (a - d).powi(2) + b * b).sqrt();
        3.0 * (m + r).max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraverseLog {
    pub seed: u64,
    pub steps: Vec<TraverseStep>,
}

impl TraverseLog {
    pub fn updates(&self) -> impl Iterator<Item = &TraverseStep> {
        self.steps.iter().filter(|s| s.n_matches > 0)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s).expect("step serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_jsonl().as_bytes()).map_err(|e| Error::io(path, e))
    }
}

pub fn read_route(path: &Path) -> Result<Vec<[f64; 2]>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let route: Vec<[f64; 2]> = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    validate_route(&route)?;
    Ok(route)
}

pub fn write_route(path: &Path, route: &[[f64; 2]]) -> Result<()> {
    let text = serde_json::to_string_pretty(route).expect("route serializes");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn validate_route(route: &[[f64; 2]]) -> Result<()> {
    if route.len() < 2 || route.iter().flatten().any(|v| !v.is_finite()) || route_length(route) <= 0.0 {
        return Err(Error::InvalidConfig("route needs at least two distinct finite waypoints".into()));
    }
    Ok(())
}

pub fn route_length(route: &[[f64; 2]]) -> f64 {
    route.windows(2).map(|w| dist2(w[0], w[1])).sum()
}

/// Point and segment heading at arc length `s` (clamped to the route).
fn point_at(route: &[[f64; 2]], s: f64) -> ([f64; 2], f64) {
    let mut left = s.max(0.0);
    let mut last = (route[0], 0.0);
    for w in route.windows(2) {
        let len = dist2(w[0], w[1]);
        if len == 0.0 {
            continue;
        }
        let h = (w[1][1] - w[0][1]).atan2(w[1][0] - w[0][0]);
        if left <= len {
            let f = left / len;
            return ([w[0][0] + f * (w[1][0] - w[0][0]), w[0][1] + f * (w[1][1] - w[0][1])], h);
        }
        left -= len;
        last = (w[1], h);
    }
    last
}

fn distance_to_route(route: &[[f64; 2]], p: [f64; 2]) -> f64 {
    route
        .windows(2)
        .map(|w| {
            let (ax, ay) = (w[1][0] - w[0][0], w[1][1] - w[0][1]);
            let l2 = ax * ax + ay * ay;
            let t = if l2 > 0.0 {
                (((p[0] - w[0][0]) * ax + (p[1] - w[0][1]) * ay) / l2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            dist2(p, [w[0][0] + t * ax, w[0][1] + t * ay])
        })
        .fold(f64::INFINITY, f64::min)
}

/// A detection carried forward: its centre relative to the dead-reckoning
/// track, which updates do not move.
struct Retained {
    detection: CraterDetection,
    odo_xy: [f64; 2],
    distance_at: f64,
}

/// Drives `route` in steps of `cfg.step_m`, sensing every `cfg.sense_every_m`.
///
/// Truth follows the route exactly; the estimate is dead-reckoned with drift
/// and corrected by landmark fixes. Per-step failures are logged and the
/// traverse continues.
pub fn run_traverse(
    world: &TraverseWorld,
    route: &[[f64; 2]],
    cfg: &TraverseConfig,
    db: &LandmarkDb,
    seed: u64,
) -> Result<TraverseLog> {
    validate_route(route)?;
    if !(cfg.step_m > 0.0 && cfg.sense_every_m > 0.0 && cfg.drift_fraction >= 0.0 && cfg.initial_sigma_m >= 0.0) {
        return Err(Error::InvalidConfig("traverse step, cadence, drift and sigma must be non-negative".into()));
    }
    cfg.measurement.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let heading_noise = Normal::new(0.0, cfg.heading_sigma_deg.to_radians().max(0.0)).expect("finite sigma");
    let init_noise = Normal::new(0.0, cfg.initial_sigma_m).expect("finite sigma");

    let length = route_length(route);
    let (mut truth, mut truth_heading) = point_at(route, 0.0);
    let mut est = RoverState::new(
        [truth[0] + init_noise.sample(&mut rng), truth[1] + init_noise.sample(&mut rng)],
        truth_heading,
        cfg.initial_sigma_m,
    );
    let mut odo = est.position;
    let mut retained: Vec<Retained> = Vec::new();
    let mut fusion = LandmarkBiasFilter::new(cfg.retain_m);
    let mut steps = vec![log_step(0, 0.0, truth, &est)];
    let mut s = 0.0;
    let mut since_sense = 0.0;
    let mut t = 0;
    while s < length - 1e-9 {
        let ds = cfg.step_m.min(length - s);
        s += ds;
        t += 1;
        let (next, _) = point_at(route, s);
        let forward = dist2(truth, next);
        let heading = if forward > 0.0 {
            (next[1] - truth[1]).atan2(next[0] - truth[0])
        } else {
            truth_heading
        };
        let seg = OdometrySegment::new(forward, heading - truth_heading, cfg.drift_fraction);
        truth = next;
        truth_heading = heading;
        let before = est.position;
        est = propagate(&est, &seg, rng.next_u64());
        odo[0] += est.position[0] - before[0];
        odo[1] += est.position[1] - before[1];
        est.heading = truth_heading + heading_noise.sample(&mut rng);
        since_sense += forward;

        let mut step = log_step(t, s, truth, &est);
        let sense_seed = rng.next_u64();
        if since_sense + 1e-9 >= cfg.sense_every_m {
            since_sense = 0.0;
            let reach = 3.0 * est.sigma_max() + cfg.association.sensing_range_m;
            if !cfg.skip_without_landmarks || !db.query_radius(est.position, reach, (0.0, f64::INFINITY)).is_empty() {
                step.sensed = true;
                let pose = Pose2::new(truth[0], truth[1], truth_heading);
                match sense(world, pose, &est, db, cfg, sense_seed) {
                    Ok(dets) => {
                        step.n_detections = dets.len();
                        retained.retain(|r| s - r.distance_at <= cfg.retain_m);
                        let mut batch: Vec<(CraterDetection, f64)> = dets.iter().map(|d| (d.clone(), 0.0)).collect();
                        for r in &retained {
                            let mut d = r.detection.clone();
                            d.center_xy = [
                                est.position[0] + r.odo_xy[0] - odo[0],
                                est.position[1] + r.odo_xy[1] - odo[1],
                            ];
                            batch.push((d, (cfg.drift_fraction * (s - r.distance_at)).powi(2)));
                        }
                        let matches = associate_weighted(&batch, db, &est, &cfg.measurement, &cfg.association);
                        let prior = est.clone();
                        match fusion.update(&est, &matches, &cfg.measurement) {
                            Ok(post) => est = post,
                            Err(e) => step.error = Some(e.to_string()),
                        }
                        let matched = matches.landmark_ids();
                        // drop carried detections of landmarks just used
                        retained.retain(|r| {
                            let p = [
                                prior.position[0] + r.odo_xy[0] - odo[0],
                                prior.position[1] + r.odo_xy[1] - odo[1],
                            ];
                            !matches.matches.iter().any(|m| {
                                dist2(p, m.landmark.position()) <= (0.5 * m.landmark.diameter_m).max(2.0)
                            })
                        });
                        for d in dets {
                            if !matches.matches.iter().any(|m| m.detection == d) {
                                retained.push(Retained {
                                    odo_xy: [
                                        odo[0] + d.center_xy[0] - prior.position[0],
                                        odo[1] + d.center_xy[1] - prior.position[1],
                                    ],
                                    detection: d,
                                    distance_at: s,
                                });
                            }
                        }
                        step.n_matches = matched.len();
                        step.matched_ids = matched;
                    }
                    Err(e) => step.error = Some(e.to_string()),
                }
                step.est_xy = est.position;
                step.cov = est.covariance;
            }
        }
        steps.push(step);
    }
    Ok(TraverseLog { seed, steps })
}

fn log_step(t: usize, distance: f64, truth: [f64; 2], est: &RoverState) -> TraverseStep {
    TraverseStep {
        t,
        distance_m: distance,
        truth_xy: truth,
        est_xy: est.position,
        cov: est.covariance,
        sensed: false,
        n_detections: 0,
        n_matches: 0,
        matched_ids: Vec::new(),
        error: None,
    }
}

fn sense(
    world: &TraverseWorld,
    pose: Pose2,
    est: &RoverState,
    db: &LandmarkDb,
    cfg: &TraverseConfig,
    seed: u64,
) -> Result<Vec<CraterDetection>> {
    let scene = world.local_scene(pose, cfg.scene_extent_m)?;
    match cfg.method {
        Method::Lidar => {
            let cloud = simulate_lidar(&scene, &cfg.lidar, seed)?;
            detect_lidar(&cloud, est, db, &cfg.lidar_detector)
        }
        Method::Stereo => {
            let (dmap, _) = simulate_stereo(&scene, &cfg.stereo, seed)?;
            detect_stereo(&dmap, &est.pose(), &cfg.stereo_detector)
        }
    }
}
