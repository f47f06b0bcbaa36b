use crate::cloud::{raycast_first_transition, NormalField, PointCloud, Vec3, VoxelIndex};
use crate::error::{Error, Result};

use super::backwall::{faces, BackwallCluster};
use super::LidarDetectorConfig;

/// Stage 2 estimate of a crater from its back-wall cluster (aligned frame).
#[derive(Debug, Clone, PartialEq)]
pub struct CraterHypothesis {
    pub front_rim: Vec3,
    pub back_rim: Vec3,
    pub center_xy: [f64; 2],
    pub diameter_est: f64,
}

/// Finds the front rim by top-down ray casts stepped from the cluster centroid
/// toward the sensor, then the back rim from re-filtered cluster normals.
///
/// `ground_z` is the fitted ground plane height in the aligned frame. It sets
/// the expected spacing of scan rings, so that natural gaps between rings on
/// far ground are not mistaken for the occlusion shadow.
pub fn estimate_rim_geometry(
    index: &VoxelIndex,
    cloud: &PointCloud,
    cluster: &BackwallCluster,
    normals: &NormalField,
    ground_z: f64,
    cfg: &LidarDetectorConfig,
) -> Result<CraterHypothesis> {
    if cluster.members.is_empty() {
        return Err(Error::HypothesisRejected("empty cluster".into()));
    }
    let sensor = cloud.sensor_origin;
    let bounds = index.bounds().ok_or(Error::NoFrontRim)?;
    let v = index.voxel_size();
    let h = (sensor.z - ground_z).max(v);
    let dalpha = cfg.vertical_res_deg.to_radians();

    let c = cluster.centroid;
    let (ux, uy) = (c.x - sensor.x, c.y - sensor.y);
    let s0 = (ux * ux + uy * uy).sqrt();
    if s0 < 1e-6 {
        return Err(Error::NoFrontRim);
    }
    let u = [ux / s0, uy / s0];
    let top = (bounds.max[2] + 2) as f64 * v;
    let down = Vec3::new(0.0, 0.0, -1.0);

    let mut last_data = s0;
    let mut front = None;
    let mut s = s0;
    while s >= cfg.min_range_m {
        let start = Vec3::new(sensor.x + s * u[0], sensor.y + s * u[1], top);
        if let Some(hit) = raycast_first_transition(index, &start, &down) {
            let gap = last_data - s;
            let ring = dalpha * (s * s + h * h) / h;
            let needed = (cfg.min_gap_voxels as f64 * v).max(cfg.gap_ring_factor * ring);
            if gap > needed {
                front = Some(Vec3::new(start.x, start.y, hit.z));
                break;
            }
            last_data = s;
        }
        s -= v;
    }
    let front = front.ok_or(Error::NoFrontRim)?;
    if c.z >= front.z {
        return Err(Error::HypothesisRejected("cluster centroid is not below the front rim".into()));
    }

    let initial = Vec3::new(0.5 * (front.x + c.x), 0.5 * (front.y + c.y), c.z);
    let cos_tol = cfg.back_rim_angle_deg.to_radians().cos();
    let sin_tilt = cfg.min_tilt_deg.to_radians().sin();
    let back = cluster
        .members
        .iter()
        .filter(|&&i| faces(&cloud.points[i], &normals.normals[i], &initial, cos_tol, sin_tilt))
        .map(|&i| cloud.points[i])
        .max_by(|a, b| {
            let pa = (a.x - sensor.x) * u[0] + (a.y - sensor.y) * u[1];
            let pb = (b.x - sensor.x) * u[0] + (b.y - sensor.y) * u[1];
            pa.total_cmp(&pb)
        })
        .ok_or_else(|| Error::HypothesisRejected("no cluster normal faces the initial center".into()))?;

    let diameter_est = ((back.x - front.x).powi(2) + (back.y - front.y).powi(2)).sqrt();
    Ok(CraterHypothesis {
        front_rim: front,
        back_rim: back,
        center_xy: [0.5 * (front.x + back.x), 0.5 * (front.y + back.y)],
        diameter_est,
    })
}
