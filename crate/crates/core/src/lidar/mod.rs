//! Three-stage crater detection in LIDAR point clouds: back-wall clusters from
//! surface normals, rim geometry from top-down ray casts, and matching of
//! parametric crater models from the landmark map.

mod backwall;
mod model;
mod rim;

pub use backwall::{find_backwall_clusters, BackwallCluster};
pub use model::{build_parametric_model, match_candidates, score_placement, ModelMatch, ModelSample, ModelView, ParametricCraterModel, Zone};
pub use rim::{estimate_rim_geometry, CraterHypothesis};

use serde::{Deserialize, Serialize};

use crate::cloud::{estimate_normals_with, fit_ground_plane_and_align, voxelize, AlignConfig, NormalConfig, PointCloud, Vec3};
use crate::detection::CraterDetection;
use crate::error::{Error, Result};
use crate::landmarks::{LandmarkDb, LandmarkRecord};
use crate::localizer::RoverState;

/// Every LIDAR detector threshold, as one flat JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarDetectorConfig {
    pub min_range_m: f64,
    pub max_range_m: f64,
    pub plane_rounds: usize,
    pub plane_inlier_distance_m: f64,
    pub plane_min_inlier_fraction: f64,
    pub patch_radius_m: f64,
    pub normal_min_neighbors: usize,
    pub normal_min_spread_ratio: f64,
    /// Patch radius floor as a multiple of the range times the scanner's vertical step.
    pub normal_range_factor: f64,
    pub max_patch_radius_m: f64,
    pub voxel_size_m: f64,
    pub toward_angle_deg: f64,
    pub min_tilt_deg: f64,
    pub cluster_radius_m: f64,
    pub min_cluster_size: usize,
    /// Scanner elevation step, used for the expected ring spacing on flat ground.
    pub vertical_res_deg: f64,
    pub gap_ring_factor: f64,
    pub min_gap_voxels: usize,
    pub back_rim_angle_deg: f64,
    pub rim_band_m: f64,
    pub accept_fraction: f64,
    pub grid_extent_m: f64,
    pub grid_pitch_m: f64,
    pub diam_tol: f64,
    /// Slack added to 3 sigma + D/2 when gating candidates by predicted position.
    pub position_gate_m: f64,
    pub sensing_range_m: f64,
    /// Outward shift along the line of sight, as `[near-rim range, shift]`
    /// knots interpolated linearly and clamped at the ends. Placements on
    /// sparse far scans settle on the sensor side of the true centre.
    pub range_bias_m: Vec<[f64; 2]>,
}

impl Default for LidarDetectorConfig {
    fn default() -> Self {
        Self {
            min_range_m: 3.0,
            max_range_m: 50.0,
            plane_rounds: 3,
            plane_inlier_distance_m: 0.15,
            plane_min_inlier_fraction: 0.3,
            patch_radius_m: 0.3,
            normal_min_neighbors: 5,
            normal_min_spread_ratio: 0.15,
            normal_range_factor: 2.5,
            max_patch_radius_m: 1.0,
            voxel_size_m: 0.25,
            toward_angle_deg: 60.0,
            min_tilt_deg: 15.0,
            cluster_radius_m: 0.75,
            min_cluster_size: 20,
            vertical_res_deg: 0.333,
            gap_ring_factor: 1.5,
            min_gap_voxels: 2,
            back_rim_angle_deg: 60.0,
            rim_band_m: 0.125,
            accept_fraction: 0.35,
            grid_extent_m: 2.0,
            grid_pitch_m: 0.25,
            diam_tol: 0.3,
            position_gate_m: 2.0,
            sensing_range_m: 30.0,
            // mean radial error of the `kpp` sweep, 20 trials per cell
            range_bias_m: vec![[5.0, 0.02], [10.0, 0.085], [15.0, 0.225], [20.0, 0.33], [25.0, 0.24]],
        }
    }
}

impl LidarDetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.max_range_m,
            self.plane_inlier_distance_m,
            self.patch_radius_m,
            self.voxel_size_m,
            self.cluster_radius_m,
            self.vertical_res_deg,
            self.grid_pitch_m,
            self.sensing_range_m,
        ];
        let knots_ok = self.range_bias_m.iter().all(|k| k[0].is_finite() && k[1].is_finite())
            && self.range_bias_m.windows(2).all(|w| w[0][0] < w[1][0]);
        if positive.iter().any(|v| !(*v > 0.0)) || self.min_range_m >= self.max_range_m || self.grid_extent_m < 0.0 || !knots_ok {
            return Err(Error::InvalidConfig(format!("invalid LIDAR detector configuration {self:?}")));
        }
        Ok(())
    }

    pub fn range_bias_at(&self, range: f64) -> f64 {
        let k = &self.range_bias_m;
        match k.iter().position(|p| p[0] >= range) {
            None => k.last().map_or(0.0, |p| p[1]),
            Some(0) => k[0][1],
            Some(i) => {
                let (a, b) = (k[i - 1], k[i]);
                a[1] + (b[1] - a[1]) * (range - a[0]) / (b[0] - a[0])
            }
        }
    }

    pub fn align(&self) -> AlignConfig {
        AlignConfig {
            rounds: self.plane_rounds,
            inlier_distance: self.plane_inlier_distance_m,
            min_inlier_fraction: self.plane_min_inlier_fraction,
            ..AlignConfig::default()
        }
    }

    pub fn normals(&self) -> NormalConfig {
        NormalConfig {
            patch_radius: self.patch_radius_m,
            min_neighbors: self.normal_min_neighbors,
            min_spread_ratio: self.normal_min_spread_ratio,
            range_scale: self.normal_range_factor * self.vertical_res_deg.to_radians(),
            max_patch_radius: self.max_patch_radius_m,
            ..NormalConfig::default()
        }
    }
}

/// Intermediate products of one detector run, for inspection and examples.
#[derive(Debug, Clone)]
pub struct LidarTrace {
    pub aligned: PointCloud,
    pub ground_z: f64,
    pub clusters: Vec<BackwallCluster>,
    pub hypotheses: Vec<std::result::Result<CraterHypothesis, String>>,
}

/// Full pipeline on a sensor-frame cloud. Candidates come from `db` within
/// 3 sigma of the prior plus the sensing range; detections are in the site frame.
pub fn detect_lidar(cloud: &PointCloud, prior: &RoverState, db: &LandmarkDb, cfg: &LidarDetectorConfig) -> Result<Vec<CraterDetection>> {
    detect_lidar_traced(cloud, prior, db, cfg).map(|(d, _)| d)
}

pub fn detect_lidar_traced(
    cloud: &PointCloud,
    prior: &RoverState,
    db: &LandmarkDb,
    cfg: &LidarDetectorConfig,
) -> Result<(Vec<CraterDetection>, Option<LidarTrace>)> {
    cfg.validate()?;
    if !prior.is_finite() {
        return Err(Error::InvalidConfig("prior covariance is not finite".into()));
    }
    let sigma = prior.sigma_max();
    let pool: Vec<LandmarkRecord> = db
        .query_radius(prior.position, 3.0 * sigma + cfg.sensing_range_m, (0.0, f64::INFINITY))
        .into_iter()
        .cloned()
        .collect();
    if pool.is_empty() {
        return Ok((Vec::new(), None));
    }

    let cropped = cloud.crop_horizontal_range(cfg.min_range_m, cfg.max_range_m);
    let (aligned, alignment) = fit_ground_plane_and_align(&cropped, &cfg.align())?;
    let ground_z = alignment.plane.offset;
    let normals = estimate_normals_with(&aligned, &cfg.normals());
    let index = voxelize(&aligned, cfg.voxel_size_m);
    let clusters = find_backwall_clusters(&aligned, &normals, cfg);
    let pose = prior.pose();
    let inv = alignment.rotation.inverse();
    let sensor_h = aligned.sensor_origin.z - ground_z;

    // predicted candidate positions in the aligned frame
    let predicted: Vec<[f64; 2]> = pool
        .iter()
        .map(|r| {
            let rel = pose.to_rover(r.position());
            let p = alignment.rotation * Vec3::new(rel[0], rel[1], -sensor_h);
            [p.x, p.y]
        })
        .collect();

    let mut hypotheses = Vec::with_capacity(clusters.len());
    let mut detections: Vec<CraterDetection> = Vec::new();
    for cluster in &clusters {
        let hyp = estimate_rim_geometry(&index, &aligned, cluster, &normals, ground_z, cfg);
        if let Ok(h) = &hyp {
            let cands: Vec<LandmarkRecord> = pool
                .iter()
                .zip(&predicted)
                .filter(|(r, p)| {
                    let rel = (h.diameter_est - r.diameter_m).abs() / r.diameter_m;
                    let dist = ((p[0] - h.center_xy[0]).powi(2) + (p[1] - h.center_xy[1]).powi(2)).sqrt();
                    rel <= cfg.diam_tol && dist <= 3.0 * sigma + 0.5 * r.diameter_m + cfg.position_gate_m
                })
                .map(|(r, _)| r.clone())
                .collect();
            let view = ModelView {
                sensor: aligned.sensor_origin,
                center_xy: h.center_xy,
                rim_z: h.front_rim.z,
                ground_z,
            };
            if let Some(mut m) = match_candidates(&index, h, &cands, &view, cfg) {
                let (dx, dy) = (m.center_xy[0] - aligned.sensor_origin.x, m.center_xy[1] - aligned.sensor_origin.y);
                let dist = dx.hypot(dy);
                if dist > 0.0 {
                    let shift = cfg.range_bias_at((dist - 0.5 * m.diameter).max(0.0));
                    m.center_xy = [m.center_xy[0] + shift * dx / dist, m.center_xy[1] + shift * dy / dist];
                }
                let local = inv * Vec3::new(m.center_xy[0], m.center_xy[1], ground_z);
                let site = pose.to_site([local.x, local.y]);
                detections.push(m.into_detection(site));
            }
        }
        hypotheses.push(hyp.map_err(|e| e.to_string()));
    }

    // one detection per landmark, best score wins
    detections.sort_by(|a, b| a.landmark_id.cmp(&b.landmark_id).then(b.score.total_cmp(&a.score)));
    detections.dedup_by_key(|d| d.landmark_id);

    Ok((
        detections,
        Some(LidarTrace {
            aligned,
            ground_z,
            clusters,
            hypotheses,
        }),
    ))
}
