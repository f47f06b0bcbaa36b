use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{SweepGrid, Trial};
use crate::detection::Method;
use crate::error::{Error, Result};
use crate::localizer::SigmaTable;

/// Published 3-sigma centre errors per diameter (5, 10, 15, 20 m), shown
/// beside measured values.
pub const LIDAR_REFERENCE_3SIGMA: [(f64, f64); 4] = [(5.0, 0.28), (10.0, 1.04), (15.0, 1.77), (20.0, 1.94)];
pub const STEREO_REFERENCE_3SIGMA: [(f64, f64); 4] = [(5.0, 1.02), (10.0, 3.22), (15.0, 4.48), (20.0, 4.35)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub diameter_m: f64,
    pub range_m: f64,
    pub trials: usize,
    pub detections: usize,
    pub pd: f64,
    /// Wilson score 95% interval.
    pub pd_low: f64,
    pub pd_high: f64,
    /// Radial RMS centre error over true positives; NaN when there are none.
    pub rms_error_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiameterSummary {
    pub diameter_m: f64,
    pub true_positives: usize,
    /// Radial RMS error over the pooled ranges; NaN when there are none.
    pub sigma_p_m: f64,
    pub three_sigma_m: f64,
    pub reference_three_sigma_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KppReport {
    pub detector: Method,
    pub seed: u64,
    pub grid: SweepGrid,
    pub true_positive_rule: String,
    pub sigma_ranges_m: (f64, f64),
    pub cells: Vec<CellSummary>,
    pub diameters: Vec<DiameterSummary>,
    pub trials: Vec<Trial>,
}

/// Wilson score interval for `k` successes in `n` trials at `confidence`.
pub fn wilson_interval(k: usize, n: usize, confidence: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = Normal::standard().inverse_cdf(0.5 + 0.5 * confidence);
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Radial RMS of the true-positive errors among `trials`.
pub fn rms_error<'a>(trials: impl IntoIterator<Item = &'a Trial>) -> (usize, f64) {
    let (mut n, mut sum) = (0, 0.0);
    for t in trials {
        if let (Some(x), Some(y)) = (t.err_x_m, t.err_y_m) {
            n += 1;
            sum += x * x + y * y;
        }
    }
    (n, if n > 0 { (sum / n as f64).sqrt() } else { f64::NAN })
}

fn reference(detector: Method, diameter: f64) -> Option<f64> {
    let table = match detector {
        Method::Lidar => &LIDAR_REFERENCE_3SIGMA,
        Method::Stereo => &STEREO_REFERENCE_3SIGMA,
    };
    table.iter().find(|(d, _)| (d - diameter).abs() < 1e-9).map(|(_, s)| *s)
}

pub fn summarize(detector: Method, grid: &SweepGrid, sigma_ranges_m: (f64, f64), seed: u64, trials: Vec<Trial>) -> KppReport {
    let same = |a: f64, b: f64| (a - b).abs() < 1e-9;
    let cells = grid
        .cells()
        .map(|(d, r)| {
            let in_cell: Vec<&Trial> = trials.iter().filter(|t| same(t.diameter_m, d) && same(t.range_m, r)).collect();
            let k = in_cell.iter().filter(|t| t.detected).count();
            let n = in_cell.len();
            let (pd_low, pd_high) = wilson_interval(k, n, 0.95);
            CellSummary {
                diameter_m: d,
                range_m: r,
                trials: n,
                detections: k,
                pd: if n > 0 { k as f64 / n as f64 } else { 0.0 },
                pd_low,
                pd_high,
                rms_error_m: rms_error(in_cell).1,
            }
        })
        .collect();
    let (lo, hi) = sigma_ranges_m;
    let diameters = grid
        .diameters_m
        .iter()
        .map(|&d| {
            let (n, rms) = rms_error(
                trials
                    .iter()
                    .filter(|t| same(t.diameter_m, d) && t.range_m >= lo - 1e-9 && t.range_m <= hi + 1e-9),
            );
            DiameterSummary {
                diameter_m: d,
                true_positives: n,
                sigma_p_m: rms,
                three_sigma_m: 3.0 * rms,
                reference_three_sigma_m: reference(detector, d),
            }
        })
        .collect();
    KppReport {
        detector,
        seed,
        grid: grid.clone(),
        true_positive_rule: "centre within max(0.25 D, 1 m) of truth".into(),
        sigma_ranges_m,
        cells,
        diameters,
        trials,
    }
}

impl KppReport {
    pub fn cell(&self, diameter: f64, range: f64) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| (c.diameter_m - diameter).abs() < 1e-9 && (c.range_m - range).abs() < 1e-9)
    }

    pub fn diameter(&self, diameter: f64) -> Option<&DiameterSummary> {
        self.diameters.iter().find(|s| (s.diameter_m - diameter).abs() < 1e-9)
    }
}

impl SigmaTable {
    /// Per-axis error table from a sweep: each cell's radial RMS over root 2.
    /// Cells with fewer than `min_tp` true positives borrow the nearest
    /// usable range of the same diameter, or the largest value in the table.
    pub fn from_report(report: &KppReport, min_tp: usize) -> Result<Self> {
        let grid = &report.grid;
        let mut diameters: Vec<f64> = grid.diameters_m.clone();
        let mut ranges: Vec<f64> = grid.ranges_m.clone();
        diameters.sort_by(f64::total_cmp);
        diameters.dedup();
        ranges.sort_by(f64::total_cmp);
        ranges.dedup();
        let raw: Vec<Vec<Option<f64>>> = diameters
            .iter()
            .map(|&d| {
                ranges
                    .iter()
                    .map(|&r| {
                        report
                            .cell(d, r)
                            .filter(|c| c.detections >= min_tp.max(1))
                            .map(|c| c.rms_error_m / std::f64::consts::SQRT_2)
                    })
                    .collect()
            })
            .collect();
        let worst = raw.iter().flatten().flatten().copied().fold(f64::NAN, f64::max);
        if worst.is_nan() {
            return Err(Error::InvalidConfig("sweep has no cell with enough true positives".into()));
        }
        let sigma_m = raw
            .iter()
            .map(|row| {
                (0..row.len())
                    .map(|j| {
                        row[j].unwrap_or_else(|| {
                            (0..row.len())
                                .filter(|&k| row[k].is_some())
                                .min_by_key(|&k| (k as isize - j as isize).unsigned_abs())
                                .and_then(|k| row[k])
                                .unwrap_or(worst)
                        })
                    })
                    .collect()
            })
            .collect();
        let table = Self {
            diameters_m: diameters,
            ranges_m: ranges,
            sigma_m,
        };
        table.validate()?;
        Ok(table)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    All,
}

pub const TRIALS_CSV: &str = "trials.csv";
pub const CELLS_CSV: &str = "cells.csv";
pub const LONG_CSV: &str = "long.csv";
pub const REPORT_JSON: &str = "report.json";

pub const TRIALS_HEADER: &str = "diameter_m,range_m,approach_deg,seed,detected,err_x_m,err_y_m";
pub const CELLS_HEADER: &str = "diameter_m,range_m,trials,detections,pd,pd_low,pd_high,rms_error_m";
pub const LONG_HEADER: &str = "detector,diameter_m,range_m,metric,value";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn trials_csv(report: &KppReport) -> String {
    let mut s = format!("{TRIALS_HEADER}\n");
    for t in &report.trials {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            t.diameter_m,
            t.range_m,
            t.approach_deg,
            t.seed,
            u8::from(t.detected),
            opt(t.err_x_m),
            opt(t.err_y_m)
        );
    }
    s
}

pub fn cells_csv(report: &KppReport) -> String {
    let mut s = format!("{CELLS_HEADER}\n");
    for c in &report.cells {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            c.diameter_m, c.range_m, c.trials, c.detections, c.pd, c.pd_low, c.pd_high, c.rms_error_m
        );
    }
    s
}

/// One row per (cell, metric): `pd` and `three_sigma_m` against range, for
/// plotting both curves per diameter.
pub fn long_csv(report: &KppReport) -> String {
    let det = match report.detector {
        Method::Lidar => "lidar",
        Method::Stereo => "stereo",
    };
    let mut s = format!("{LONG_HEADER}\n");
    for c in &report.cells {
        let _ = writeln!(s, "{det},{},{},pd,{}", c.diameter_m, c.range_m, c.pd);
        let _ = writeln!(s, "{det},{},{},three_sigma_m,{}", c.diameter_m, c.range_m, 3.0 * c.rms_error_m);
    }
    s
}

pub fn parse_cells_csv(text: &str) -> Result<Vec<CellSummary>> {
    let mut lines = text.lines();
    let mut offset = 0u64;
    match lines.next() {
        Some(h) if h == CELLS_HEADER => offset += h.len() as u64 + 1,
        _ => {
            return Err(Error::Parse {
                offset: 0,
                message: format!("expected header {CELLS_HEADER:?}"),
            })
        }
    }
    let mut out = Vec::new();
    for line in lines {
        let bad = |m: String| Error::Parse { offset, message: m };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(bad(format!("expected 8 fields, found {}", f.len())));
        }
        let num = |i: usize| f[i].parse::<f64>().map_err(|e| bad(format!("field {}: {e}", i + 1)));
        let int = |i: usize| f[i].parse::<usize>().map_err(|e| bad(format!("field {}: {e}", i + 1)));
        out.push(CellSummary {
            diameter_m: num(0)?,
            range_m: num(1)?,
            trials: int(2)?,
            detections: int(3)?,
            pd: num(4)?,
            pd_low: num(5)?,
            pd_high: num(6)?,
            rms_error_m: num(7)?,
        });
        offset += line.len() as u64 + 1;
    }
    Ok(out)
}

/// Writes the report into `dir` and returns the files written.
pub fn emit_report(report: &KppReport, dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<(&str, String)> = Vec::new();
    if matches!(format, ReportFormat::Csv | ReportFormat::All) {
        files.push((TRIALS_CSV, trials_csv(report)));
        files.push((CELLS_CSV, cells_csv(report)));
        files.push((LONG_CSV, long_csv(report)));
    }
    if matches!(format, ReportFormat::Json | ReportFormat::All) {
        let json = serde_json::to_string_pretty(report).expect("report serializes");
        files.push((REPORT_JSON, json + "\n"));
    }
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_known_values() {
        // 8 of 10 at 95%: (0.490, 0.943)
        let (lo, hi) = wilson_interval(8, 10, 0.95);
        assert!((lo - 0.4902).abs() < 1e-3 && (hi - 0.9433).abs() < 1e-3, "{lo} {hi}");
        assert_eq!(wilson_interval(0, 0, 0.95), (0.0, 1.0));
        let (lo, _) = wilson_interval(0, 40, 0.95);
        assert_eq!(lo, 0.0);
    }
}
