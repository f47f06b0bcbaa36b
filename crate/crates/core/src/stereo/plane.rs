use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensor::DisparityMap;

/// Plane `A x + B y + C d + D = 0` over (column, row, disparity), scaled so C = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisparityPlane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// RMS of (observed - predicted) over inliers of the final fit (px).
    pub residual_rms: f64,
}

impl DisparityPlane {
    #[inline]
    pub fn predict(&self, col: f64, row: f64) -> f64 {
        -(self.a * col + self.b * row + self.d) / self.c
    }

    /// Change in predicted disparity per row moving down the image.
    pub fn row_gradient(&self) -> f64 {
        -self.b / self.c
    }
}

pub const MIN_VALID_PX: usize = 1000;

/// Robust fit over all valid pixels: least squares followed by `rounds` of
/// Cauchy reweighting scaled by the median absolute residual.
pub fn fit_disparity_plane(dmap: &DisparityMap, rounds: usize) -> Result<DisparityPlane> {
    let mut obs = Vec::with_capacity(dmap.valid_count());
    for row in 0..dmap.height {
        for col in 0..dmap.width {
            if let Some(d) = dmap.get(col, row) {
                obs.push((col as f64, row as f64, d));
            }
        }
    }
    if obs.len() < MIN_VALID_PX {
        return Err(Error::DegenerateDisparity(format!(
            "{} valid pixels, need at least {MIN_VALID_PX}",
            obs.len()
        )));
    }
    let mut w = vec![1.0; obs.len()];
    let mut coef = solve(&obs, &w)?;
    let mut scale = 0.0;
    for _ in 0..rounds {
        let res: Vec<f64> = obs.iter().map(|&(x, y, d)| d - eval(&coef, x, y)).collect();
        let mut abs: Vec<f64> = res.iter().map(|r| r.abs()).collect();
        let mid = abs.len() / 2;
        abs.select_nth_unstable_by(mid, f64::total_cmp);
        scale = 1.4826 * abs[mid];
        if scale < 1e-12 {
            break;
        }
        let k = 2.385 * scale;
        for (wi, r) in w.iter_mut().zip(&res) {
            *wi = 1.0 / (1.0 + (r / k).powi(2));
        }
        coef = solve(&obs, &w)?;
    }
    let cut = if scale > 0.0 { 3.0 * scale } else { f64::INFINITY };
    let (mut ss, mut n) = (0.0, 0usize);
    for &(x, y, d) in &obs {
        let r = d - eval(&coef, x, y);
        if r.abs() <= cut {
            ss += r * r;
            n += 1;
        }
    }
    Ok(DisparityPlane {
        a: -coef[0],
        b: -coef[1],
        c: 1.0,
        d: -coef[2],
        residual_rms: if n > 0 { (ss / n as f64).sqrt() } else { 0.0 },
    })
}

#[inline]
fn eval(c: &Vector3<f64>, x: f64, y: f64) -> f64 {
    c[0] * x + c[1] * y + c[2]
}

/// Weighted least squares for d = p x + q y + r, on centred coordinates.
fn solve(obs: &[(f64, f64, f64)], w: &[f64]) -> Result<Vector3<f64>> {
    let ws: f64 = w.iter().sum();
    let (mut mx, mut my, mut md) = (0.0, 0.0, 0.0);
    for (&(x, y, d), &wi) in obs.iter().zip(w) {
        mx += wi * x;
        my += wi * y;
        md += wi * d;
    }
    mx /= ws;
    my /= ws;
    md /= ws;
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    for (&(x, y, d), &wi) in obs.iter().zip(w) {
        let v = Vector3::new(x - mx, y - my, 1.0);
        ata += wi * v * v.transpose();
        atb += wi * (d - md) * v;
    }
    let sol = ata
        .cholesky()
        .ok_or_else(|| Error::DegenerateDisparity("valid pixels are rank deficient".into()))?
        .solve(&atb);
    let (p, q) = (sol[0], sol[1]);
    Ok(Vector3::new(p, q, md - p * mx - q * my + sol[2]))
}
