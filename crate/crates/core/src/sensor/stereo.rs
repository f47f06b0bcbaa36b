use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::trace::TerrainTracer;
use super::{level_to_site, sensor_position, DisparityMap};
use crate::cloud::{Frame, PointCloud, Vec3};
use crate::error::{Error, Result};
use crate::terrain::SceneTruth;

/// Pinhole stereo pair. The left camera is the reference; the right camera
/// sits `baseline_m` to its right. Pixel `(col, row)` has row 0 at the top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StereoConfig {
    pub width_px: usize,
    pub height_px: usize,
    pub hfov_deg: f64,
    pub baseline_m: f64,
    pub camera_height_m: f64,
    pub tilt_deg: f64,
    pub disparity_noise_sigma_px: f64,
    pub dropout_probability: f64,
    /// Range jump (against the local linear trend) that marks a discontinuity.
    pub discontinuity_m: f64,
    pub max_range_m: f64,
}

impl Default for StereoConfig {
    fn default() -> Self {
        Self {
            width_px: 1024,
            height_px: 1024,
            hfov_deg: 90.0,
            baseline_m: 0.30,
            camera_height_m: 1.5,
            tilt_deg: 20.0,
            disparity_noise_sigma_px: 0.25,
            dropout_probability: 0.5,
            discontinuity_m: 0.5,
            max_range_m: 120.0,
        }
    }
}

impl StereoConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.width_px > 2
            && self.width_px == self.height_px
            && self.hfov_deg > 0.0
            && self.hfov_deg < 180.0
            && self.baseline_m > 0.0
            && self.camera_height_m > 0.0
            && self.disparity_noise_sigma_px >= 0.0
            && (0.0..=1.0).contains(&self.dropout_probability)
            && self.max_range_m > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid stereo configuration {self:?}")))
        }
    }

    pub fn focal_px(&self) -> f64 {
        0.5 * self.width_px as f64 / (0.5 * self.hfov_deg.to_radians()).tan()
    }

    fn principal_point(&self) -> (f64, f64) {
        (0.5 * (self.width_px as f64 - 1.0), 0.5 * (self.height_px as f64 - 1.0))
    }

    fn axes(&self) -> (Vec3, Vec3, Vec3) {
        let t = self.tilt_deg.to_radians();
        let forward = Vec3::new(t.cos(), 0.0, -t.sin());
        let right = Vec3::new(0.0, -1.0, 0.0);
        let down = Vec3::new(-t.sin(), 0.0, -t.cos());
        (forward, right, down)
    }

    /// Level-frame ray through pixel centre `(col, row)`, scaled so its
    /// optical-axis component is 1. A point at depth `z` is `ray * z`.
    pub fn pixel_ray(&self, col: f64, row: f64) -> Vec3 {
        let (cx, cy) = self.principal_point();
        let f = self.focal_px();
        let (fw, rt, dn) = self.axes();
        fw + rt * ((col - cx) / f) + dn * ((row - cy) / f)
    }

    /// Projects a level-frame point (relative to the left camera) to
    /// `(col, row, depth)`. `None` behind the camera.
    pub fn project(&self, p: &Vec3) -> Option<(f64, f64, f64)> {
        let (fw, rt, dn) = self.axes();
        let z = p.dot(&fw);
        if z <= 1e-9 {
            return None;
        }
        let (cx, cy) = self.principal_point();
        let f = self.focal_px();
        Some((cx + f * p.dot(&rt) / z, cy + f * p.dot(&dn) / z, z))
    }

    pub fn disparity_for_depth(&self, z: f64) -> f64 {
        self.focal_px() * self.baseline_m / z
    }

    pub fn depth_for_disparity(&self, d: f64) -> f64 {
        self.focal_px() * self.baseline_m / d
    }

    /// Level-frame point for a pixel and disparity.
    pub fn triangulate(&self, col: f64, row: f64, d: f64) -> Vec3 {
        self.pixel_ray(col, row) * self.depth_for_disparity(d)
    }
}

/// Renders the left-camera disparity map and its triangulated cloud.
pub fn simulate_stereo(scene: &SceneTruth, cfg: &StereoConfig, seed: u64) -> Result<(DisparityMap, PointCloud)> {
    cfg.validate()?;
    let origin = sensor_position(scene, cfg.camera_height_m)?;
    let heading = scene.rover_pose.heading;
    let tracer = TerrainTracer::new(&scene.heightfield);
    let (w, h) = (cfg.width_px, cfg.height_px);

    // true depth along the optical axis, NaN where the ray finds no terrain
    let depth: Vec<f64> = (0..h)
        .into_par_iter()
        .flat_map_iter(|row| {
            let tracer = &tracer;
            (0..w).map(move |col| {
                let ray = cfg.pixel_ray(col as f64, row as f64);
                let n = ray.norm();
                let dir = level_to_site(&(ray / n), heading);
                match tracer.cast(&origin, &dir, cfg.max_range_m) {
                    Some(t) => t / n,
                    None => f64::NAN,
                }
            })
        })
        .collect();

    let disc = discontinuity_mask(&depth, w, h, cfg.discontinuity_m);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, cfg.disparity_noise_sigma_px.max(0.0)).expect("finite sigma");
    let f_b = cfg.focal_px() * cfg.baseline_m;
    let mut data = vec![f32::NAN; w * h];
    let mut points = Vec::new();
    for row in 0..h {
        for col in 0..w {
            let i = row * w + col;
            let z = depth[i];
            if !z.is_finite() {
                continue;
            }
            let mut d = f_b / z;
            if cfg.disparity_noise_sigma_px > 0.0 {
                d += noise.sample(&mut rng);
            }
            let dropped = disc[i] && rng.random::<f64>() < cfg.dropout_probability;
            if dropped || d <= 0.0 {
                continue;
            }
            data[i] = d as f32;
            points.push(cfg.triangulate(col as f64, row as f64, data[i] as f64));
        }
    }
    let map = DisparityMap::new(w, h, data, cfg.clone())?;
    Ok((map, PointCloud::new(points, Frame::Sensor, Vec3::zeros())))
}

/// Pixels whose 3x3 neighbourhood contains a range jump: a second difference
/// above `thresh` along a row or column, or a hit next to a miss.
fn discontinuity_mask(depth: &[f64], w: usize, h: usize, thresh: f64) -> Vec<bool> {
    let at = |r: usize, c: usize| depth[r * w + c];
    let mut jump = vec![false; w * h];
    for r in 0..h {
        for c in 0..w {
            let z = at(r, c);
            if !z.is_finite() {
                continue;
            }
            let mut j = false;
            if r > 0 && r + 1 < h {
                let (a, b) = (at(r - 1, c), at(r + 1, c));
                j |= !a.is_finite() || !b.is_finite() || (a - 2.0 * z + b).abs() > thresh;
            }
            if c > 0 && c + 1 < w {
                let (a, b) = (at(r, c - 1), at(r, c + 1));
                j |= !a.is_finite() || !b.is_finite() || (a - 2.0 * z + b).abs() > thresh;
            }
            jump[r * w + c] = j;
        }
    }
    let mut out = vec![false; w * h];
    for r in 0..h {
        for c in 0..w {
            if !jump[r * w + c] {
                continue;
            }
            for rr in r.saturating_sub(1)..=(r + 1).min(h - 1) {
                for cc in c.saturating_sub(1)..=(c + 1).min(w - 1) {
                    out[rr * w + cc] = true;
                }
            }
        }
    }
    out
}
