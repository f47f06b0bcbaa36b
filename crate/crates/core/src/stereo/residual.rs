use super::DisparityPlane;
use crate::sensor::DisparityMap;

/// Observed minus plane-predicted disparity; NaN where the input is invalid.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualMap {
    pub width: usize,
    pub height: usize,
    pub residual: Vec<f32>,
}

impl ResidualMap {
    #[inline]
    pub fn get(&self, col: usize, row: usize) -> Option<f64> {
        let r = self.residual[row * self.width + col];
        r.is_finite().then_some(r as f64)
    }
}

pub fn compute_residual_map(dmap: &DisparityMap, plane: &DisparityPlane) -> ResidualMap {
    let mut residual = vec![f32::NAN; dmap.width * dmap.height];
    for row in 0..dmap.height {
        for col in 0..dmap.width {
            if let Some(d) = dmap.get(col, row) {
                residual[row * dmap.width + col] = (d - plane.predict(col as f64, row as f64)) as f32;
            }
        }
    }
    ResidualMap {
        width: dmap.width,
        height: dmap.height,
        residual,
    }
}
