//! Geometric LIDAR and stereo simulation against a [`SceneTruth`](crate::terrain::SceneTruth).
//!
//! Both sensors report in the sensor frame: origin at the sensor, x along the
//! rover heading, y to the left, z up (gravity-level, independent of tilt).

mod disparity;
mod lidar;
mod stereo;
mod trace;

pub use disparity::{read_disparity, write_disparity, DisparityMap, DisparitySidecar};
pub use lidar::{simulate_lidar, LidarConfig};
pub use stereo::{simulate_stereo, StereoConfig};

use crate::cloud::Vec3;
use crate::error::{Error, Result};
use crate::terrain::SceneTruth;

/// Site-frame position of a sensor mounted `height` above the rover's ground point.
pub(crate) fn sensor_position(scene: &SceneTruth, height: f64) -> Result<Vec3> {
    let pose = scene.rover_pose;
    let ground = scene
        .heightfield
        .sample(pose.x, pose.y)
        .ok_or_else(|| Error::InvalidScene("rover pose outside the heightfield".into()))?;
    Ok(Vec3::new(pose.x, pose.y, ground + height))
}

/// Rotates a heading-aligned vector into the site frame.
pub(crate) fn level_to_site(v: &Vec3, heading: f64) -> Vec3 {
    let (s, c) = heading.sin_cos();
    Vec3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
}
