use nalgebra::{DMatrix, DVector};

use super::{implied_position, MatchSet, MeasurementModel, RoverState};
use crate::error::{Error, Result};

/// Joint filter over rover position and the map offsets of recently used
/// landmarks.
///
/// A landmark's catalogue error is the same every time it is seen, so fusing
/// repeated sightings as independent fixes overstates confidence. Carrying
/// each offset as a state (prior variance = map variance) keeps re-sightings
/// consistent. Offsets unused for `forget_m` of travel are marginalized out.
#[derive(Debug, Clone)]
pub struct LandmarkBiasFilter {
    ids: Vec<u64>,
    last_used: Vec<f64>,
    /// [rover x, rover y, b1x, b1y, ...]
    x: DVector<f64>,
    p: DMatrix<f64>,
    forget_m: f64,
}

impl LandmarkBiasFilter {
    pub fn new(forget_m: f64) -> Self {
        Self {
            ids: Vec::new(),
            last_used: Vec::new(),
            x: DVector::zeros(2),
            p: DMatrix::zeros(2, 2),
            forget_m,
        }
    }

    pub fn tracked(&self) -> &[u64] {
        &self.ids
    }

    fn forget(&mut self, distance: f64) {
        let keep: Vec<usize> = (0..self.ids.len())
            .filter(|&k| distance - self.last_used[k] <= self.forget_m)
            .collect();
        if keep.len() == self.ids.len() {
            return;
        }
        let rows: Vec<usize> = [0, 1].into_iter().chain(keep.iter().flat_map(|&k| [2 + 2 * k, 3 + 2 * k])).collect();
        self.x = DVector::from_iterator(rows.len(), rows.iter().map(|&r| self.x[r]));
        self.p = DMatrix::from_fn(rows.len(), rows.len(), |i, j| self.p[(rows[i], rows[j])]);
        self.ids = keep.iter().map(|&k| self.ids[k]).collect();
        self.last_used = keep.iter().map(|&k| self.last_used[k]).collect();
    }

    fn slot(&mut self, id: u64, map_var: f64) -> usize {
        if let Some(k) = self.ids.iter().position(|&i| i == id) {
            return k;
        }
        let n = self.x.len();
        self.x = self.x.clone().insert_rows(n, 2, 0.0);
        self.p = self.p.clone().insert_rows(n, 2, 0.0).insert_columns(n, 2, 0.0);
        self.p[(n, n)] = map_var;
        self.p[(n + 1, n + 1)] = map_var;
        self.ids.push(id);
        self.last_used.push(f64::NEG_INFINITY);
        self.ids.len() - 1
    }

    /// Fuses `matches` into `state`. The rover block of the joint covariance
    /// is taken from `state`, so dead-reckoning growth since the last call
    /// carries over; cross terms with landmark offsets are kept.
    pub fn update(&mut self, state: &RoverState, matches: &MatchSet, model: &MeasurementModel) -> Result<RoverState> {
        if matches.is_empty() {
            return Ok(state.clone());
        }
        model.validate()?;
        let distance = state.distance_traveled;
        self.forget(distance);
        self.x[0] = state.position[0];
        self.x[1] = state.position[1];
        let c = state.cov();
        for i in 0..2 {
            for j in 0..2 {
                self.p[(i, j)] = c[(i, j)];
            }
        }
        let map_var = model.map_sigma_m * model.map_sigma_m;
        for m in &matches.matches {
            let det_var = model.fix_variance(&m.detection, state.position) - map_var + m.extra_variance;
            if !(det_var.is_finite() && det_var >= 0.0) {
                return Err(Error::SingularFusion(format!("measurement variance {det_var} is not PSD")));
            }
            let k = self.slot(m.landmark.id, map_var);
            self.last_used[k] = distance;
            let n = self.x.len();
            let b = 2 + 2 * k;
            // z = rover + offset + noise
            let z = implied_position(state, m);
            let mut h = DMatrix::zeros(2, n);
            h[(0, 0)] = 1.0;
            h[(1, 1)] = 1.0;
            h[(0, b)] = 1.0;
            h[(1, b + 1)] = 1.0;
            let pred = &h * &self.x;
            let nu = DVector::from_vec(vec![z[0] - pred[0], z[1] - pred[1]]);
            let r = DMatrix::identity(2, 2) * det_var;
            let ph = &self.p * h.transpose();
            let s = &h * &ph + &r;
            let s_inv = s
                .try_inverse()
                .ok_or_else(|| Error::SingularFusion("innovation covariance is singular".into()))?;
            let gain = &ph * s_inv;
            self.x += &gain * nu;
            let ikh = DMatrix::identity(n, n) - &gain * &h;
            self.p = &ikh * &self.p * ikh.transpose() + &gain * &r * gain.transpose();
            self.p = 0.5 * (&self.p + self.p.transpose());
        }
        let mut out = state.clone();
        out.position = [self.x[0], self.x[1]];
        out.set_cov(&nalgebra::Matrix2::new(self.p[(0, 0)], self.p[(0, 1)], self.p[(1, 0)], self.p[(1, 1)]));
        out.since_fix = 0.0;
        Ok(out)
    }
}
