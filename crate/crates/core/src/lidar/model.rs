use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{Vec3, VoxelIndex};
use crate::detection::{CraterDetection, Method};
use crate::landmarks::LandmarkRecord;

use super::rim::CraterHypothesis;
use super::LidarDetectorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    /// Near interior hidden from the sensor behind the front rim.
    PreRimOcclusion,
    Rim,
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSample {
    /// Horizontal offset from the model centre.
    pub offset: [f64; 2],
    /// Absolute height in the aligned frame.
    pub z: f64,
    pub zone: Zone,
}

/// Where the model sits relative to the sensor and the ground (aligned frame).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelView {
    pub sensor: Vec3,
    pub center_xy: [f64; 2],
    /// Height of the rim crest.
    pub rim_z: f64,
    /// Height of the surrounding ground; the floor sits `depth` below it.
    pub ground_z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParametricCraterModel {
    pub landmark_id: u64,
    pub diameter: f64,
    pub depth: f64,
    pub samples: Vec<ModelSample>,
}

impl ParametricCraterModel {
    pub fn zone_count(&self, zone: Zone) -> usize {
        self.samples.iter().filter(|s| s.zone == zone).count()
    }
}

/// Bowl height at radius `r` for a spherical cap through the rim crest
/// (`r = radius`, height 0) and the floor (`r = 0`, height `-h`).
fn cap_height(r: f64, radius: f64, h: f64) -> f64 {
    if h <= 0.0 {
        return 0.0;
    }
    if h > radius {
        // deeper than a hemisphere: ellipsoidal bowl
        return -h * (1.0 - (r / radius).powi(2)).max(0.0).sqrt();
    }
    let rho = (radius * radius + h * h) / (2.0 * h);
    -h + rho - (rho * rho - r * r).max(0.0).sqrt()
}

/// Samples the bowl on a square grid of pitch `voxel_size` and labels each
/// sample. Interior samples whose sightline from the sensor passes at least a
/// voxel below the rim crest are marked as occluded.
pub fn build_parametric_model(landmark: &LandmarkRecord, view: &ModelView, cfg: &LidarDetectorConfig) -> ParametricCraterModel {
    let radius = 0.5 * landmark.diameter_m;
    let pitch = cfg.voxel_size_m;
    let band = cfg.rim_band_m;
    let h = view.rim_z - (view.ground_z - landmark.depth_m);
    let n = ((radius + band) / pitch).ceil() as i64;
    let mut samples = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            let (dx, dy) = (i as f64 * pitch, j as f64 * pitch);
            let r = (dx * dx + dy * dy).sqrt();
            if r > radius + band {
                continue;
            }
            let z = view.rim_z + cap_height(r.min(radius), radius, h);
            let zone = if (r - radius).abs() <= band {
                Zone::Rim
            } else if occluded([dx, dy], z, radius, view, pitch) {
                Zone::PreRimOcclusion
            } else {
                Zone::Interior
            };
            samples.push(ModelSample { offset: [dx, dy], z, zone });
        }
    }
    ParametricCraterModel {
        landmark_id: landmark.id,
        diameter: landmark.diameter_m,
        depth: landmark.depth_m,
        samples,
    }
}

fn occluded(offset: [f64; 2], z: f64, radius: f64, view: &ModelView, margin: f64) -> bool {
    // sensor relative to the crater centre
    let sx = view.sensor.x - view.center_xy[0];
    let sy = view.sensor.y - view.center_xy[1];
    let (dx, dy) = (offset[0] - sx, offset[1] - sy);
    // first crossing of the rim circle along the horizontal sightline
    let a = dx * dx + dy * dy;
    let b = 2.0 * (sx * dx + sy * dy);
    let c = sx * sx + sy * sy - radius * radius;
    let disc = b * b - 4.0 * a * c;
    if a <= 0.0 || disc < 0.0 || c <= 0.0 {
        return false;
    }
    let lambda = (-b - disc.sqrt()) / (2.0 * a);
    if !(0.0..1.0).contains(&lambda) {
        return false;
    }
    let z_line = view.sensor.z + lambda * (z - view.sensor.z);
    z_line < view.rim_z - margin
}

/// Sum of unit penalties over the model placed with its centre at `placement_xy`.
pub fn score_placement(index: &VoxelIndex, model: &ParametricCraterModel, placement_xy: [f64; 2]) -> f64 {
    let cols = LocalColumns::new(index, model, placement_xy, 0.0);
    score_detail(&cols, model, placement_xy).0
}

/// Dense copy of the voxel columns under a search window, so scoring avoids
/// hash lookups.
struct LocalColumns<'a> {
    index: &'a VoxelIndex,
    x0: i32,
    y0: i32,
    nx: i32,
    ny: i32,
    cols: Vec<&'a [i32]>,
}

impl<'a> LocalColumns<'a> {
    fn new(index: &'a VoxelIndex, model: &ParametricCraterModel, center: [f64; 2], extent: f64) -> Self {
        let v = index.voxel_size();
        let reach = model.samples.iter().map(|s| s.offset[0].abs().max(s.offset[1].abs())).fold(0.0, f64::max);
        let half = reach + extent + 3.0 * v;
        let lo = index.cell_of(&Vec3::new(center[0] - half, center[1] - half, 0.0));
        let hi = index.cell_of(&Vec3::new(center[0] + half, center[1] + half, 0.0));
        let (nx, ny) = (hi[0] - lo[0] + 1, hi[1] - lo[1] + 1);
        let mut cols = Vec::with_capacity((nx * ny) as usize);
        for iy in 0..ny {
            for ix in 0..nx {
                cols.push(index.column(lo[0] + ix, lo[1] + iy));
            }
        }
        Self {
            index,
            x0: lo[0],
            y0: lo[1],
            nx,
            ny,
            cols,
        }
    }

    #[inline]
    fn column(&self, ix: i32, iy: i32) -> &'a [i32] {
        let (i, j) = (ix - self.x0, iy - self.y0);
        if i < 0 || j < 0 || i >= self.nx || j >= self.ny {
            return self.index.column(ix, iy);
        }
        self.cols[(j * self.nx + i) as usize]
    }

    fn nearest_within(&self, p: &Vec3, c: [i32; 3], reach: i32) -> Option<f64> {
        let mut best = f64::INFINITY;
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                let zs = self.column(c[0] + dx, c[1] + dy);
                if zs.is_empty() {
                    continue;
                }
                let lo = zs.partition_point(|&z| z < c[2] - reach);
                for &z in &zs[lo..] {
                    if z > c[2] + reach {
                        break;
                    }
                    let d = (self.index.center([c[0] + dx, c[1] + dy, z]) - p).norm_squared();
                    best = best.min(d);
                }
            }
        }
        best.is_finite().then(|| best.sqrt())
    }
}

/// Score and mean rim-sample distance to data (the tie-breaker).
fn score_detail(cols: &LocalColumns, model: &ParametricCraterModel, placement_xy: [f64; 2]) -> (f64, f64) {
    let index = cols.index;
    let v = index.voxel_size();
    let diag = 3f64.sqrt() * v;
    let mut score = 0.0;
    let mut rim_dist = 0.0;
    let mut rim_n = 0usize;
    for s in &model.samples {
        let p = Vec3::new(placement_xy[0] + s.offset[0], placement_xy[1] + s.offset[1], s.z);
        let c = index.cell_of(&p);
        match s.zone {
            Zone::Rim => {
                let d = cols.nearest_within(&p, c, 2);
                rim_n += 1;
                rim_dist += d.unwrap_or(3.0 * v);
                if !d.is_some_and(|d| d <= diag) {
                    score -= 1.0;
                }
            }
            Zone::PreRimOcclusion => {
                let above = cols.column(c[0], c[1]).last().is_some_and(|&t| t > c[2]);
                if above || cols.nearest_within(&p, c, 1).is_some_and(|d| d <= diag) {
                    score -= 1.0;
                }
            }
            Zone::Interior => {
                if cols.column(c[0], c[1]).last().is_some_and(|&t| t >= c[2] + 2) {
                    score -= 1.0;
                }
            }
        }
    }
    (score, if rim_n > 0 { rim_dist / rim_n as f64 } else { 0.0 })
}

/// Best placement of one model on the search grid around `center`.
fn best_placement(index: &VoxelIndex, model: &ParametricCraterModel, center: [f64; 2], cfg: &LidarDetectorConfig) -> ([f64; 2], f64, f64) {
    let n = (cfg.grid_extent_m / cfg.grid_pitch_m).round() as i64;
    let offsets: Vec<(i64, i64)> = (-n..=n).flat_map(|i| (-n..=n).map(move |j| (i, j))).collect();
    let cols = LocalColumns::new(index, model, center, n as f64 * cfg.grid_pitch_m);
    offsets
        .par_iter()
        .map(|&(i, j)| {
            let xy = [center[0] + i as f64 * cfg.grid_pitch_m, center[1] + j as f64 * cfg.grid_pitch_m];
            let (s, d) = score_detail(&cols, model, xy);
            (xy, s, d)
        })
        .reduce_with(|a, b| if better(&b, &a) { b } else { a })
        .expect("grid is nonempty")
}

fn better(a: &([f64; 2], f64, f64), b: &([f64; 2], f64, f64)) -> bool {
    if a.1 != b.1 {
        return a.1 > b.1;
    }
    if a.2 != b.2 {
        return a.2 < b.2;
    }
    // deterministic final order
    (a.0[0], a.0[1]) < (b.0[0], b.0[1])
}

/// Result of Stage 3 in the aligned frame, before conversion to the site frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMatch {
    pub landmark_id: u64,
    pub center_xy: [f64; 2],
    pub diameter: f64,
    pub score: f64,
    pub sample_count: usize,
}

/// Stage 3: scores every candidate over the placement grid and returns the best
/// one if it clears the acceptance threshold.
pub fn match_candidates(
    index: &VoxelIndex,
    hypothesis: &CraterHypothesis,
    candidates: &[LandmarkRecord],
    view: &ModelView,
    cfg: &LidarDetectorConfig,
) -> Option<ModelMatch> {
    let mut best: Option<(ModelMatch, f64)> = None;
    for cand in candidates {
        let model = build_parametric_model(cand, view, cfg);
        if model.samples.is_empty() {
            continue;
        }
        let (xy, score, dist) = best_placement(index, &model, hypothesis.center_xy, cfg);
        let n = model.samples.len();
        if score < -cfg.accept_fraction * n as f64 {
            continue;
        }
        // normalise so candidates of different size compare as mismatch fractions
        let norm = score / n as f64;
        let m = ModelMatch {
            landmark_id: cand.id,
            center_xy: xy,
            diameter: cand.diameter_m,
            score: norm,
            sample_count: n,
        };
        let replace = match &best {
            None => true,
            Some((b, bd)) => norm > b.score || (norm == b.score && dist < *bd),
        };
        if replace {
            best = Some((m, dist));
        }
    }
    best.map(|(m, _)| m)
}

impl ModelMatch {
    pub(crate) fn into_detection(self, center_site: [f64; 2]) -> CraterDetection {
        CraterDetection {
            center_xy: center_site,
            diameter: self.diameter,
            score: self.score,
            landmark_id: Some(self.landmark_id),
            method: Method::Lidar,
        }
    }
}
