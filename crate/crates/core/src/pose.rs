use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Planar pose in the site frame. Heading is measured counter-clockwise from +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: wrap_angle(heading),
        }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    /// Maps a rover-frame offset (x forward, y left) into the site frame.
    pub fn to_site(&self, rel: [f64; 2]) -> [f64; 2] {
        let r = rotate(rel, self.heading);
        [self.x + r[0], self.y + r[1]]
    }

    /// Maps a site-frame point into the rover frame.
    pub fn to_rover(&self, site: [f64; 2]) -> [f64; 2] {
        rotate([site[0] - self.x, site[1] - self.y], -self.heading)
    }
}

pub fn rotate(v: [f64; 2], angle: f64) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

pub fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_is_half_open() {
        assert!((wrap_angle(PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn site_rover_round_trip() {
        let pose = Pose2::new(3.0, -2.0, 0.7);
        let rel = [4.0, 1.5];
        let site = pose.to_site(rel);
        let back = pose.to_rover(site);
        assert!((back[0] - rel[0]).abs() < 1e-12 && (back[1] - rel[1]).abs() < 1e-12);
    }
}
