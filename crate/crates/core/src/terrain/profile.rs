use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default depth-to-diameter ratio for fresh simple craters.
pub const DEFAULT_DEPTH_RATIO: f64 = 0.2;
/// Default rim-height-to-diameter ratio.
pub const DEFAULT_RIM_RATIO: f64 = 0.04;

/// A single crater placed in the site frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CraterSpec {
    pub id: u64,
    pub center_xy: [f64; 2],
    pub diameter: f64,
    pub depth: f64,
    pub rim_height: f64,
}

impl CraterSpec {
    /// Crater with the default depth and rim ratios.
    pub fn new(id: u64, center_xy: [f64; 2], diameter: f64) -> Self {
        Self {
            id,
            center_xy,
            diameter,
            depth: DEFAULT_DEPTH_RATIO * diameter,
            rim_height: DEFAULT_RIM_RATIO * diameter,
        }
    }

    pub fn with_depth(mut self, depth: f64) -> Self {
        self.depth = depth;
        self
    }

    pub fn with_rim_height(mut self, rim_height: f64) -> Self {
        self.rim_height = rim_height;
        self
    }

    pub fn radius(&self) -> f64 {
        0.5 * self.diameter
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.diameter.is_finite()
            && self.depth.is_finite()
            && self.rim_height.is_finite()
            && self.center_xy.iter().all(|v| v.is_finite())
            && self.diameter > 0.0
            && self.depth > 0.0
            && self.depth <= self.diameter
            && self.rim_height >= 0.0
            && self.rim_height < self.depth;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidScene(format!(
                "crater {}: need diameter > 0, 0 < depth <= diameter, 0 <= rim_height < depth (got D={}, depth={}, rim={})",
                self.id, self.diameter, self.depth, self.rim_height
            )))
        }
    }
}

/// Elevation offset of a crater at horizontal distance `r` from its center.
///
/// Inside the rim the bowl is a spherical cap passing through the rim circle
/// and the floor; when the cap would exceed a hemisphere an ellipsoidal bowl
/// with the same rim and floor is used instead. Outside the rim a raised
/// annulus decays with a cubic (smoothstep) profile to zero at `r = D`.
pub fn crater_profile(spec: &CraterSpec, r: f64) -> f64 {
    let radius = spec.radius();
    let r = r.abs();
    if r >= spec.diameter {
        return 0.0;
    }
    if r >= radius {
        let s = (r - radius) / radius;
        return spec.rim_height * (1.0 - 3.0 * s * s + 2.0 * s * s * s);
    }
    let h = spec.depth + spec.rim_height;
    if h <= radius {
        let rho = (radius * radius + h * h) / (2.0 * h);
        -spec.depth + rho - (rho * rho - r * r).max(0.0).sqrt()
    } else {
        let q = (r / radius).min(1.0);
        -spec.depth + h * (1.0 - (1.0 - q * q).max(0.0).sqrt())
    }
}
