//! Crater detection in disparity maps.
//!
//! A robust plane fit removes the ground; in the residual, the near rim shows
//! as a drop going up a column and the far wall as a steady linear rise.

mod contours;
mod pair;
mod plane;
mod regions;
mod residual;

pub use contours::{find_rim_contours, ContourPixel, RimContour};
pub use pair::pair_and_estimate;
pub use plane::{fit_disparity_plane, DisparityPlane, MIN_VALID_PX};
pub use regions::{find_farwall_regions, BoundingBox, ColumnSegment, FarWallRegion};
pub use residual::{compute_residual_map, ResidualMap};

use serde::{Deserialize, Serialize};

use crate::detection::CraterDetection;
use crate::error::{Error, Result};
use crate::pose::Pose2;
use crate::sensor::DisparityMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StereoDetectorConfig {
    pub plane_rounds: usize,
    /// Sliding window length for the per-column line fit (rows).
    pub window_px: usize,
    pub lin_tol_px: f64,
    pub short_window_px: usize,
    /// Invalid rows a per-column run may bridge.
    pub max_run_gap_px: usize,
    /// Far-wall slope bounds as multiples of the plane's row gradient.
    pub slope_min_ratio: f64,
    pub slope_max_ratio: f64,
    pub short_slope_min_ratio: f64,
    pub min_region_px: usize,
    pub jump_threshold_px: f64,
    pub jump_window_px: usize,
    pub max_gap_px: usize,
    pub contour_row_tol_px: usize,
    pub contour_col_gap_px: usize,
    pub min_contour_cols: usize,
    pub pair_overlap: f64,
    pub pair_row_tol_px: u32,
    pub max_pair_gap_px: u32,
    /// Fraction of paired columns, around the middle, used for the estimate.
    pub central_fraction: f64,
    pub min_diameter_m: f64,
    pub max_diameter_m: f64,
}

impl Default for StereoDetectorConfig {
    fn default() -> Self {
        Self {
            plane_rounds: 3,
            window_px: 15,
            lin_tol_px: 0.3,
            short_window_px: 8,
            max_run_gap_px: 2,
            slope_min_ratio: 0.5,
            slope_max_ratio: 1.3,
            short_slope_min_ratio: 0.7,
            min_region_px: 50,
            jump_threshold_px: 1.0,
            jump_window_px: 3,
            max_gap_px: 4,
            contour_row_tol_px: 2,
            contour_col_gap_px: 2,
            min_contour_cols: 10,
            pair_overlap: 0.5,
            pair_row_tol_px: 3,
            max_pair_gap_px: 60,
            central_fraction: 0.3,
            min_diameter_m: 1.0,
            max_diameter_m: 50.0,
        }
    }
}

impl StereoDetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.window_px >= 3
            && self.short_window_px >= 3
            && self.lin_tol_px > 0.0
            && self.slope_min_ratio < self.slope_max_ratio
            && self.jump_threshold_px > 0.0
            && self.jump_window_px >= 1
            && (0.0..=1.0).contains(&self.pair_overlap)
            && self.central_fraction > 0.0
            && self.central_fraction <= 1.0
            && self.min_diameter_m < self.max_diameter_m;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid stereo detector configuration {self:?}")))
        }
    }
}

/// Intermediate products of [`detect_stereo_traced`].
#[derive(Debug, Clone)]
pub struct StereoTrace {
    pub plane: DisparityPlane,
    pub residual: ResidualMap,
    pub regions: Vec<FarWallRegion>,
    pub contours: Vec<RimContour>,
}

/// Full pipeline. `pose` is the rover (left camera) pose in the site frame.
pub fn detect_stereo(dmap: &DisparityMap, pose: &Pose2, cfg: &StereoDetectorConfig) -> Result<Vec<CraterDetection>> {
    detect_stereo_traced(dmap, pose, cfg).map(|(d, _)| d)
}

pub fn detect_stereo_traced(
    dmap: &DisparityMap,
    pose: &Pose2,
    cfg: &StereoDetectorConfig,
) -> Result<(Vec<CraterDetection>, StereoTrace)> {
    cfg.validate()?;
    let plane = fit_disparity_plane(dmap, cfg.plane_rounds)?;
    let residual = compute_residual_map(dmap, &plane);
    let regions = find_farwall_regions(&residual, plane.row_gradient(), cfg);
    let contours = find_rim_contours(&residual, cfg);
    let dets = pair_and_estimate(&regions, &contours, dmap, pose, cfg);
    Ok((
        dets,
        StereoTrace {
            plane,
            residual,
            regions,
            contours,
        },
    ))
}
