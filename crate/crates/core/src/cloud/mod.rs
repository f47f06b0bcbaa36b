//! Point-cloud primitives shared by both detectors.

mod grid;
mod normals;
mod plane;
pub mod ply;
mod voxel;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

pub use grid::SpatialHash;
pub use normals::{estimate_normals, estimate_normals_with, NormalConfig, NormalField};
pub use plane::{fit_ground_plane_and_align, fit_plane_robust, AlignConfig, Alignment, PlaneFit};
pub use voxel::{raycast_first_transition, voxelize, CellBox, VoxelIndex};

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Sensor,
    Site,
}

impl Frame {
    pub fn as_str(&self) -> &'static str {
        match self {
            Frame::Sensor => "sensor",
            Frame::Site => "site",
        }
    }
}

/// 3D samples with the position of the sensor that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub frame: Frame,
    pub sensor_origin: Vec3,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>, frame: Frame, sensor_origin: Vec3) -> Self {
        Self {
            points,
            frame,
            sensor_origin,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Keeps points whose horizontal distance from the sensor is in `[min, max]`.
    pub fn crop_horizontal_range(&self, min: f64, max: f64) -> PointCloud {
        let o = self.sensor_origin;
        let points = self
            .points
            .iter()
            .filter(|p| {
                let d = ((p.x - o.x).powi(2) + (p.y - o.y).powi(2)).sqrt();
                d >= min && d <= max
            })
            .copied()
            .collect();
        PointCloud::new(points, self.frame, o)
    }
}
