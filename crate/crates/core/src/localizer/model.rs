use serde::{Deserialize, Serialize};

use crate::detection::{CraterDetection, Method};
use crate::error::{Error, Result};
use crate::pose::dist2;

/// Per-axis detector position error (m) on a diameter x range grid, with
/// bilinear interpolation and clamping outside the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaTable {
    pub diameters_m: Vec<f64>,
    pub ranges_m: Vec<f64>,
    /// `sigma_m[i][j]` for `diameters_m[i]`, `ranges_m[j]`.
    pub sigma_m: Vec<Vec<f64>>,
}

impl SigmaTable {
    pub fn constant(sigma: f64) -> Self {
        Self {
            diameters_m: vec![1.0],
            ranges_m: vec![1.0],
            sigma_m: vec![vec![sigma]],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sorted = |v: &[f64]| !v.is_empty() && v.windows(2).all(|w| w[0] < w[1]);
        let ok = sorted(&self.diameters_m)
            && sorted(&self.ranges_m)
            && self.sigma_m.len() == self.diameters_m.len()
            && self
                .sigma_m
                .iter()
                .all(|row| row.len() == self.ranges_m.len() && row.iter().all(|s| s.is_finite() && *s >= 0.0));
        if ok {
            Ok(())
        } else {
            Err(Error::SingularFusion("sigma table is malformed or has negative entries".into()))
        }
    }

    pub fn lookup(&self, diameter: f64, range: f64) -> f64 {
        let (i0, i1, a) = bracket(&self.diameters_m, diameter);
        let (j0, j1, b) = bracket(&self.ranges_m, range);
        let s = &self.sigma_m;
        let lo = s[i0][j0] * (1.0 - b) + s[i0][j1] * b;
        let hi = s[i1][j0] * (1.0 - b) + s[i1][j1] * b;
        lo * (1.0 - a) + hi * a
    }
}

fn bracket(axis: &[f64], v: f64) -> (usize, usize, f64) {
    let n = axis.len();
    if n == 1 || v <= axis[0] {
        return (0, 0, 0.0);
    }
    if v >= axis[n - 1] {
        return (n - 1, n - 1, 0.0);
    }
    let k = axis.partition_point(|&x| x <= v);
    let (a, b) = (axis[k - 1], axis[k]);
    (k - 1, k, (v - a) / (b - a))
}

/// Measurement noise for position fixes: detector error by method plus the
/// map's own registration error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasurementModel {
    pub lidar: SigmaTable,
    pub stereo: SigmaTable,
    pub map_sigma_m: f64,
    /// Multiplier on the table sigma when fusing. The tables come from
    /// independent single-crater trials; sightings along a traverse share
    /// terrain-specific error that those trials cannot show.
    pub sigma_inflation: f64,
}

impl Default for MeasurementModel {
    fn default() -> Self {
        // per-axis errors measured with the `kpp` sweep preset, 20 trials per
        // cell; cells without detections copy their nearest neighbour
        let diameters_m = vec![5.0, 10.0, 15.0, 20.0];
        let ranges_m = vec![5.0, 10.0, 15.0, 20.0, 25.0];
        Self {
            lidar: SigmaTable {
                diameters_m: diameters_m.clone(),
                ranges_m: ranges_m.clone(),
                sigma_m: vec![
                    vec![0.14, 0.12, 0.10, 0.13, 0.19],
                    vec![0.11, 0.10, 0.12, 0.16, 0.15],
                    vec![0.08, 0.09, 0.12, 0.11, 0.10],
                    vec![0.11, 0.10, 0.14, 0.14, 0.14],
                ],
            },
            stereo: SigmaTable {
                diameters_m,
                ranges_m,
                sigma_m: vec![
                    vec![0.06, 0.11, 0.28, 0.28, 0.28],
                    vec![0.40, 0.21, 0.47, 0.80, 0.80],
                    vec![0.85, 0.60, 0.94, 0.73, 0.73],
                    vec![0.76, 1.54, 1.45, 1.23, 1.23],
                ],
            },
            map_sigma_m: crate::landmarks::DEFAULT_MAP_NOISE,
            sigma_inflation: 1.5,
        }
    }
}

impl MeasurementModel {
    pub fn validate(&self) -> Result<()> {
        self.lidar.validate()?;
        self.stereo.validate()?;
        if !(self.map_sigma_m.is_finite() && self.map_sigma_m >= 0.0) {
            return Err(Error::SingularFusion(format!("map sigma {} is not a valid deviation", self.map_sigma_m)));
        }
        if !(self.sigma_inflation.is_finite() && self.sigma_inflation > 0.0) {
            return Err(Error::SingularFusion(format!("sigma inflation {} must be positive", self.sigma_inflation)));
        }
        Ok(())
    }

    /// Per-axis variance of one fix (m^2); `range` is to the crater's near rim.
    pub fn variance(&self, method: Method, diameter: f64, range: f64) -> f64 {
        let t = match method {
            Method::Lidar => &self.lidar,
            Method::Stereo => &self.stereo,
        };
        (self.sigma_inflation * t.lookup(diameter, range)).powi(2) + self.map_sigma_m.powi(2)
    }

    /// [`Self::variance`] for a detection seen from `rover`, at the range to
    /// its near rim.
    pub fn fix_variance(&self, det: &CraterDetection, rover: [f64; 2]) -> f64 {
        let range = (dist2(det.center_xy, rover) - 0.5 * det.diameter).max(0.0);
        self.variance(det.method, det.diameter, range)
    }
}
