use nalgebra::{Matrix3, Rotation3, SymmetricEigen};

use super::{PointCloud, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignConfig {
    /// Reweighting rounds after the initial least-squares fit.
    pub rounds: usize,
    /// Absolute distance (m) under which a point counts as a plane inlier.
    pub inlier_distance: f64,
    /// Minimum inlier fraction for the fit to be accepted.
    pub min_inlier_fraction: f64,
    /// Upper bound on points used in the fit; larger clouds are strided.
    pub max_fit_points: usize,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            rounds: 3,
            inlier_distance: 0.15,
            min_inlier_fraction: 0.3,
            max_fit_points: 60_000,
        }
    }
}

/// Plane `normal . p = offset` with `normal` of unit length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFit {
    pub normal: Vec3,
    pub offset: f64,
    pub inlier_fraction: f64,
    pub residual_scale: f64,
}

impl PlaneFit {
    pub fn distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub rotation: Rotation3<f64>,
    pub plane: PlaneFit,
}

fn weighted_plane(points: &[Vec3], weights: &[f64]) -> Option<(Vec3, Vec3, [f64; 3])> {
    let wsum: f64 = weights.iter().sum();
    if wsum <= 0.0 {
        return None;
    }
    let mut c = Vec3::zeros();
    for (p, w) in points.iter().zip(weights) {
        c += p * *w;
    }
    c /= wsum;
    let mut cov = Matrix3::zeros();
    for (p, w) in points.iter().zip(weights) {
        let d = p - c;
        cov += d * d.transpose() * *w;
    }
    cov /= wsum;
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let n: Vec3 = eig.eigenvectors.column(order[0]).into_owned();
    let vals = [
        eig.eigenvalues[order[0]],
        eig.eigenvalues[order[1]],
        eig.eigenvalues[order[2]],
    ];
    Some((n.normalize(), c, vals))
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mid = v.len() / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    *m
}

/// Iteratively reweighted least-squares plane fit (Cauchy weights scaled by
/// the residual MAD). The normal is oriented toward `toward`.
pub fn fit_plane_robust(points: &[Vec3], toward: &Vec3, cfg: &AlignConfig) -> Result<PlaneFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateCloud(format!("{} points", points.len())));
    }
    let stride = points.len().div_ceil(cfg.max_fit_points.max(3));
    let sample: Vec<Vec3> = points.iter().step_by(stride).copied().collect();
    let mut weights = vec![1.0; sample.len()];
    let (mut n, mut c, vals) =
        weighted_plane(&sample, &weights).ok_or_else(|| Error::DegenerateCloud("zero weight".into()))?;
    if vals[1] <= 1e-12 * vals[2].max(1e-300) || vals[2] <= 0.0 {
        return Err(Error::DegenerateCloud("points are collinear".into()));
    }
    let mut scale = 0.0;
    for _ in 0..cfg.rounds {
        let res: Vec<f64> = sample.iter().map(|p| n.dot(&(p - c))).collect();
        scale = 1.4826 * median(res.iter().map(|r| r.abs()).collect());
        if scale <= 1e-12 {
            break;
        }
        let k = 2.5 * scale;
        for (w, r) in weights.iter_mut().zip(&res) {
            *w = 1.0 / (1.0 + (r / k).powi(2));
        }
        let (n2, c2, _) = weighted_plane(&sample, &weights).ok_or_else(|| Error::DegenerateCloud("zero weight".into()))?;
        n = n2;
        c = c2;
    }
    if n.dot(&(toward - c)) < 0.0 {
        n = -n;
    }
    let offset = n.dot(&c);
    let inliers = points.iter().filter(|p| (n.dot(p) - offset).abs() <= cfg.inlier_distance).count();
    let inlier_fraction = inliers as f64 / points.len() as f64;
    Ok(PlaneFit {
        normal: n,
        offset,
        inlier_fraction,
        residual_scale: scale,
    })
}

/// Fits the ground plane and rotates the cloud so its normal becomes +Z.
pub fn fit_ground_plane_and_align(cloud: &PointCloud, cfg: &AlignConfig) -> Result<(PointCloud, Alignment)> {
    if cloud.len() < 100 {
        return Err(Error::DegenerateCloud(format!("need at least 100 points, got {}", cloud.len())));
    }
    let plane = fit_plane_robust(&cloud.points, &cloud.sensor_origin, cfg)?;
    if plane.inlier_fraction < cfg.min_inlier_fraction {
        return Err(Error::DegenerateCloud(format!(
            "plane inlier fraction {:.3} below {:.3}",
            plane.inlier_fraction, cfg.min_inlier_fraction
        )));
    }
    let rotation = Rotation3::rotation_between(&plane.normal, &Vec3::z()).unwrap_or_else(Rotation3::identity);
    let points = cloud.points.iter().map(|p| rotation * p).collect();
    let aligned = PointCloud::new(points, cloud.frame, rotation * cloud.sensor_origin);
    Ok((aligned, Alignment { rotation, plane }))
}
