use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::RoverState;
use crate::pose::wrap_angle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdometrySegment {
    pub delta_forward: f64,
    pub delta_heading: f64,
    /// Position error per unit distance driven since the last absolute fix.
    pub drift_fraction: f64,
}

impl OdometrySegment {
    pub fn new(delta_forward: f64, delta_heading: f64, drift_fraction: f64) -> Self {
        Self {
            delta_forward,
            delta_heading,
            drift_fraction: drift_fraction.max(0.0),
        }
    }
}

/// Per-axis variance added when driving from `since_fix` to `since_fix + delta`.
///
/// Dead-reckoning error grows in proportion to distance, so the accumulated
/// per-axis standard deviation after a distance `L` is `drift * L`.
pub fn drift_variance(drift: f64, since_fix: f64, delta: f64) -> f64 {
    let l = since_fix.max(0.0);
    let d = delta.abs();
    drift * drift * ((l + d).powi(2) - l * l)
}

/// Dead-reckoning step: turn, advance along the new heading, then add
/// zero-mean position noise and grow the covariance to match.
pub fn propagate(state: &RoverState, odo: &OdometrySegment, seed: u64) -> RoverState {
    let mut next = state.clone();
    next.heading = wrap_angle(state.heading + odo.delta_heading);
    let (s, c) = next.heading.sin_cos();
    next.position[0] += c * odo.delta_forward;
    next.position[1] += s * odo.delta_forward;
    let q = drift_variance(odo.drift_fraction, state.since_fix, odo.delta_forward);
    if q > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, q.sqrt()).expect("finite variance");
        next.position[0] += n.sample(&mut rng);
        next.position[1] += n.sample(&mut rng);
        next.covariance[0][0] += q;
        next.covariance[1][1] += q;
    }
    next.distance_traveled += odo.delta_forward.abs();
    next.since_fix += odo.delta_forward.abs();
    next
}
