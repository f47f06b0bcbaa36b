use nalgebra::{Matrix3, SymmetricEigen};

use super::{PointCloud, SpatialHash, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalConfig {
    pub patch_radius: f64,
    /// Neighbours (excluding the point itself) required for a valid normal.
    pub min_neighbors: usize,
    /// Larger neighbourhoods are strided down to this many points.
    pub max_neighbors: usize,
    /// Second principal spread must exceed this fraction of the patch radius;
    /// rejects neighbourhoods that are a single scan line.
    pub min_spread_ratio: f64,
    /// Patch radius grows to `range_scale * distance to sensor` where that is
    /// larger, so sparse far-range samples still get enough neighbours.
    pub range_scale: f64,
    pub max_patch_radius: f64,
}

impl Default for NormalConfig {
    fn default() -> Self {
        Self {
            patch_radius: 0.3,
            min_neighbors: 5,
            max_neighbors: 64,
            min_spread_ratio: 0.15,
            range_scale: 0.0,
            max_patch_radius: 1.0,
        }
    }
}

/// Per-point unit normals; `valid[i]` is false where the patch was degenerate.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalField {
    pub normals: Vec<Vec3>,
    pub valid: Vec<bool>,
}

impl NormalField {
    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}

pub fn estimate_normals(cloud: &PointCloud, patch_radius: f64) -> NormalField {
    estimate_normals_with(
        cloud,
        &NormalConfig {
            patch_radius,
            ..NormalConfig::default()
        },
    )
}

/// Least-squares local plane normals, flipped toward the sensor origin.
pub fn estimate_normals_with(cloud: &PointCloud, cfg: &NormalConfig) -> NormalField {
    let pts = &cloud.points;
    let hash = SpatialHash::new(pts, cfg.patch_radius);
    let mut normals = vec![Vec3::zeros(); pts.len()];
    let mut valid = vec![false; pts.len()];
    let mut nbrs = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        let radius = (cfg.range_scale * (p - cloud.sensor_origin).norm())
            .min(cfg.max_patch_radius)
            .max(cfg.patch_radius);
        let min_spread2 = (cfg.min_spread_ratio * radius).powi(2);
        hash.within(pts, p, radius, &mut nbrs);
        // the query point itself is always in the list
        if nbrs.len() < cfg.min_neighbors + 1 {
            continue;
        }
        let stride = nbrs.len().div_ceil(cfg.max_neighbors.max(1));
        let mut c = Vec3::zeros();
        let mut n = 0.0;
        for &j in nbrs.iter().step_by(stride) {
            c += pts[j as usize];
            n += 1.0;
        }
        c /= n;
        let mut cov = Matrix3::zeros();
        for &j in nbrs.iter().step_by(stride) {
            let d = pts[j as usize] - c;
            cov += d * d.transpose();
        }
        cov /= n;
        let eig = SymmetricEigen::new(cov);
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        if eig.eigenvalues[order[1]] < min_spread2 {
            continue;
        }
        let mut nrm: Vec3 = eig.eigenvectors.column(order[0]).into_owned().normalize();
        if nrm.dot(&(cloud.sensor_origin - p)) < 0.0 {
            nrm = -nrm;
        }
        normals[i] = nrm;
        valid[i] = true;
    }
    NormalField { normals, valid }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::Frame;

    #[test]
    fn flat_cloud_points_up() {
        let mut pts = Vec::new();
        for i in 0..30 {
            for j in 0..30 {
                pts.push(Vec3::new(i as f64 * 0.05, j as f64 * 0.05, 0.0));
            }
        }
        let cloud = PointCloud::new(pts, Frame::Sensor, Vec3::new(0.5, 0.5, 2.0));
        let nf = estimate_normals(&cloud, 0.3);
        assert_eq!(nf.valid_count(), cloud.len());
        for n in &nf.normals {
            assert!((n - Vec3::z()).norm() < 1e-3);
        }
    }

    #[test]
    fn isolated_point_invalid() {
        let mut pts = vec![Vec3::new(100.0, 0.0, 0.0)];
        for i in 0..10 {
            for j in 0..10 {
                pts.push(Vec3::new(i as f64 * 0.05, j as f64 * 0.05, 0.0));
            }
        }
        let cloud = PointCloud::new(pts, Frame::Sensor, Vec3::new(0.0, 0.0, 2.0));
        let nf = estimate_normals(&cloud, 0.3);
        assert!(!nf.valid[0]);
        assert!(nf.valid[1]);
    }

    #[test]
    fn single_scan_line_invalid() {
        let pts: Vec<Vec3> = (0..50).map(|i| Vec3::new(i as f64 * 0.02, 0.0, 0.0)).collect();
        let cloud = PointCloud::new(pts, Frame::Sensor, Vec3::new(0.0, 0.0, 2.0));
        assert_eq!(estimate_normals(&cloud, 0.3).valid_count(), 0);
    }
}
