use serde::{Deserialize, Serialize};

use super::{ResidualMap, StereoDetectorConfig};

/// Rows `top..=bottom` of one column (row 0 is the top of the image).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSegment {
    pub col: u32,
    pub top: u32,
    pub bottom: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_col: u32,
    pub max_col: u32,
    pub min_row: u32,
    pub max_row: u32,
}

/// Connected set of column segments whose residual rises linearly going up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarWallRegion {
    /// Sorted by column, then by top row.
    pub segments: Vec<ColumnSegment>,
    pub bbox: BoundingBox,
    pub pixel_count: usize,
}

impl FarWallRegion {
    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.segments.iter().flat_map(|s| (s.top..=s.bottom).map(move |r| (s.col, r)))
    }

    /// Topmost row of the region in `col`, if any.
    pub fn top_in(&self, col: u32) -> Option<u32> {
        self.segments.iter().filter(|s| s.col == col).map(|s| s.top).min()
    }

    /// Bottom-most row of the region in `col`, if any.
    pub fn bottom_in(&self, col: u32) -> Option<u32> {
        self.segments.iter().filter(|s| s.col == col).map(|s| s.bottom).max()
    }
}

/// Prefix sums over one run of valid samples; `(row, residual)` pairs with
/// rows relative to the run start.
struct Run {
    rows: Vec<usize>,
    s_y: Vec<f64>,
    s_r: Vec<f64>,
    s_yy: Vec<f64>,
    s_yr: Vec<f64>,
    s_rr: Vec<f64>,
}

impl Run {
    fn new(samples: &[(usize, f64)]) -> Self {
        let n = samples.len();
        let base = samples[0].0;
        let mut run = Run {
            rows: samples.iter().map(|s| s.0).collect(),
            s_y: vec![0.0; n + 1],
            s_r: vec![0.0; n + 1],
            s_yy: vec![0.0; n + 1],
            s_yr: vec![0.0; n + 1],
            s_rr: vec![0.0; n + 1],
        };
        for (k, &(row, r)) in samples.iter().enumerate() {
            let y = (row - base) as f64;
            run.s_y[k + 1] = run.s_y[k] + y;
            run.s_r[k + 1] = run.s_r[k] + r;
            run.s_yy[k + 1] = run.s_yy[k] + y * y;
            run.s_yr[k + 1] = run.s_yr[k] + y * r;
            run.s_rr[k + 1] = run.s_rr[k] + r * r;
        }
        run
    }

    /// (slope going up, fit RMS) for samples `a..b`.
    fn fit(&self, a: usize, b: usize) -> (f64, f64) {
        let n = (b - a) as f64;
        let sy = self.s_y[b] - self.s_y[a];
        let sr = self.s_r[b] - self.s_r[a];
        let syy = self.s_yy[b] - self.s_yy[a] - sy * sy / n;
        let syr = self.s_yr[b] - self.s_yr[a] - sy * sr / n;
        let srr = self.s_rr[b] - self.s_rr[a] - sr * sr / n;
        let slope = syr / syy;
        let sse = (srr - slope * syr).max(0.0);
        // rows grow downward, so rising going up is a negative row slope
        (-slope, (sse / n).sqrt())
    }

    fn mark(&self, win: usize, lo: f64, hi: f64, lin_tol: f64, mark: &mut [bool], w: usize, col: usize) {
        if self.rows.len() < win {
            return;
        }
        for a in 0..=self.rows.len() - win {
            let (slope, rms) = self.fit(a, a + win);
            if rms <= lin_tol && slope >= lo && slope <= hi {
                for r in self.rows[a]..=self.rows[a + win - 1] {
                    mark[r * w + col] = true;
                }
            }
        }
    }
}

/// Marks, per column, rows covered by a window that passes the linearity and
/// slope tests, then labels 8-connected components of the marked pixels.
///
/// The slope band is relative to `plane_row_gradient`: a wall facing the
/// camera holds disparity nearly constant while the ground plane keeps rising
/// down the image, so its residual climbs at close to that rate going up.
/// Distant far walls span only a few rows, so a shorter window with a
/// stricter lower slope bound runs alongside the main one.
pub fn find_farwall_regions(rmap: &ResidualMap, plane_row_gradient: f64, cfg: &StereoDetectorConfig) -> Vec<FarWallRegion> {
    let (w, h) = (rmap.width, rmap.height);
    let g = plane_row_gradient.abs();
    let hi = cfg.slope_max_ratio * g;
    let mut mark = vec![false; w * h];
    let mut samples: Vec<(usize, f64)> = Vec::with_capacity(h);
    for col in 0..w {
        samples.clear();
        let flush = |samples: &mut Vec<(usize, f64)>, mark: &mut Vec<bool>| {
            if samples.len() >= cfg.short_window_px.min(cfg.window_px) {
                let run = Run::new(samples);
                run.mark(cfg.window_px, cfg.slope_min_ratio * g, hi, cfg.lin_tol_px, mark, w, col);
                run.mark(cfg.short_window_px, cfg.short_slope_min_ratio * g, hi, cfg.lin_tol_px, mark, w, col);
            }
            samples.clear();
        };
        for row in 0..h {
            if let Some(r) = rmap.get(col, row) {
                if samples.last().is_some_and(|&(prev, _)| row - prev - 1 > cfg.max_run_gap_px) {
                    flush(&mut samples, &mut mark);
                }
                samples.push((row, r));
            }
        }
        flush(&mut samples, &mut mark);
    }
    label_regions(&mark, w, h, cfg.min_region_px)
}

fn label_regions(mark: &[bool], w: usize, h: usize, min_px: usize) -> Vec<FarWallRegion> {
    let mut label = vec![u32::MAX; w * h];
    let mut regions = Vec::new();
    let mut stack = Vec::new();
    // column-major scan so region order follows image columns
    for col in 0..w {
        for row in 0..h {
            let i = row * w + col;
            if !mark[i] || label[i] != u32::MAX {
                continue;
            }
            let id = regions.len() as u32;
            let mut pixels = Vec::new();
            label[i] = id;
            stack.push((col, row));
            while let Some((c, r)) = stack.pop() {
                pixels.push((c as u32, r as u32));
                for dc in -1i64..=1 {
                    for dr in -1i64..=1 {
                        let (cc, rr) = (c as i64 + dc, r as i64 + dr);
                        if cc < 0 || rr < 0 || cc >= w as i64 || rr >= h as i64 {
                            continue;
                        }
                        let j = rr as usize * w + cc as usize;
                        if mark[j] && label[j] == u32::MAX {
                            label[j] = id;
                            stack.push((cc as usize, rr as usize));
                        }
                    }
                }
            }
            regions.push(pixels);
        }
    }
    regions
        .into_iter()
        .filter(|p| p.len() >= min_px)
        .map(|mut pixels| {
            pixels.sort_unstable();
            let mut segments: Vec<ColumnSegment> = Vec::new();
            for &(c, r) in &pixels {
                match segments.last_mut() {
                    Some(s) if s.col == c && s.bottom + 1 == r => s.bottom = r,
                    _ => segments.push(ColumnSegment { col: c, top: r, bottom: r }),
                }
            }
            let bbox = BoundingBox {
                min_col: pixels.first().map_or(0, |p| p.0),
                max_col: pixels.last().map_or(0, |p| p.0),
                min_row: pixels.iter().map(|p| p.1).min().unwrap_or(0),
                max_row: pixels.iter().map(|p| p.1).max().unwrap_or(0),
            };
            FarWallRegion {
                segments,
                bbox,
                pixel_count: pixels.len(),
            }
        })
        .collect()
}
