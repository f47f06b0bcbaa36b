use nalgebra::{Matrix2, Vector2};

use super::{MatchSet, MeasurementModel, RoverState};
use crate::error::{Error, Result};

/// Implied rover position for one match: the landmark minus the detection's
/// offset from the prior.
pub fn implied_position(prior: &RoverState, m: &super::Match) -> [f64; 2] {
    [
        prior.position[0] + m.landmark.x_m - m.detection.center_xy[0],
        prior.position[1] + m.landmark.y_m - m.detection.center_xy[1],
    ]
}

/// Fuses every match into the prior by sequential covariance-weighted least
/// squares. An empty match set returns the prior unchanged.
pub fn update(state: &RoverState, matches: &MatchSet, model: &MeasurementModel) -> Result<RoverState> {
    if matches.is_empty() {
        return Ok(state.clone());
    }
    model.validate()?;
    let mut x = Vector2::new(state.position[0], state.position[1]);
    let mut p = state.cov();
    for m in &matches.matches {
        let r = model.fix_variance(&m.detection, state.position) + m.extra_variance;
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::SingularFusion(format!("measurement variance {r} is not PSD")));
        }
        let z = implied_position(state, m);
        let s = p + Matrix2::identity() * r;
        let s_inv = s
            .try_inverse()
            .ok_or_else(|| Error::SingularFusion("innovation covariance is singular".into()))?;
        let k = p * s_inv;
        x += k * (Vector2::new(z[0], z[1]) - x);
        // Joseph form keeps the covariance symmetric PSD
        let ikh = Matrix2::identity() - k;
        p = ikh * p * ikh.transpose() + k * k.transpose() * r;
    }
    let mut out = state.clone();
    out.position = [x[0], x[1]];
    out.set_cov(&p);
    out.since_fix = 0.0;
    Ok(out)
}
