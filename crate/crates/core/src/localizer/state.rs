use nalgebra::{Matrix2, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::pose::{wrap_angle, Pose2};

/// Absolute position estimate. Heading is treated as known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoverState {
    pub position: [f64; 2],
    pub heading: f64,
    /// Row-major 2x2 position covariance (m^2).
    pub covariance: [[f64; 2]; 2],
    pub distance_traveled: f64,
    /// Distance driven since the last absolute fix; drives the drift model.
    pub since_fix: f64,
}

impl RoverState {
    pub fn new(position: [f64; 2], heading: f64, sigma: f64) -> Self {
        Self {
            position,
            heading: wrap_angle(heading),
            covariance: [[sigma * sigma, 0.0], [0.0, sigma * sigma]],
            distance_traveled: 0.0,
            since_fix: 0.0,
        }
    }

    pub fn pose(&self) -> Pose2 {
        Pose2::new(self.position[0], self.position[1], self.heading)
    }

    pub fn cov(&self) -> Matrix2<f64> {
        Matrix2::new(
            self.covariance[0][0],
            self.covariance[0][1],
            self.covariance[1][0],
            self.covariance[1][1],
        )
    }

    pub fn set_cov(&mut self, m: &Matrix2<f64>) {
        let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
        self.covariance = [[m[(0, 0)], off], [off, m[(1, 1)]]];
    }

    /// Standard deviation along the worst axis.
    pub fn sigma_max(&self) -> f64 {
        let e = SymmetricEigen::new(self.cov()).eigenvalues;
        e.max().max(0.0).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite()) && self.covariance.iter().flatten().all(|v| v.is_finite())
    }
}
