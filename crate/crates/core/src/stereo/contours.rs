use serde::{Deserialize, Serialize};

use super::{ResidualMap, StereoDetectorConfig};

/// One pixel of a rim contour: the lower (nearer) side of a range jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourPixel {
    pub col: u32,
    pub row: u32,
    /// Residual just below minus residual just above (px).
    pub jump: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RimContour {
    /// Sorted by column; at most one pixel per column.
    pub pixels: Vec<ContourPixel>,
    pub mean_jump: f64,
}

impl RimContour {
    pub fn columns(&self) -> (u32, u32) {
        (self.pixels[0].col, self.pixels[self.pixels.len() - 1].col)
    }

    pub fn row_at(&self, col: u32) -> Option<u32> {
        self.pixels
            .binary_search_by_key(&col, |p| p.col)
            .ok()
            .map(|i| self.pixels[i].row)
    }
}

/// Per-column disparity drops going up the image, chained across columns.
///
/// The jump at a boundary compares the mean residual of up to `jump_window_px`
/// valid rows below it with the same above it. Up to `max_gap_px` invalid rows
/// may separate the two sides, since dropout clusters at discontinuities.
pub fn find_rim_contours(rmap: &ResidualMap, cfg: &StereoDetectorConfig) -> Vec<RimContour> {
    let (w, h) = (rmap.width, rmap.height);
    let k = cfg.jump_window_px.max(1);
    let mut cands: Vec<Vec<ContourPixel>> = vec![Vec::new(); w];
    let mut col_vals: Vec<Option<f64>> = vec![None; h];
    let mut jumps: Vec<(usize, f64)> = Vec::new();
    for (col, out) in cands.iter_mut().enumerate() {
        for (row, v) in col_vals.iter_mut().enumerate() {
            *v = rmap.get(col, row);
        }
        jumps.clear();
        let mut above: Option<usize> = None;
        for row in 0..h {
            if col_vals[row].is_none() {
                continue;
            }
            if let Some(j) = above {
                if row - j - 1 <= cfg.max_gap_px {
                    let below_mean = side_mean(&col_vals, row, k, true);
                    let above_mean = side_mean(&col_vals, j, k, false);
                    let jump = below_mean - above_mean;
                    if jump >= cfg.jump_threshold_px {
                        jumps.push((row, jump));
                    }
                }
            }
            above = Some(row);
        }
        // keep local maxima so one edge gives one pixel per column
        for (i, &(row, jump)) in jumps.iter().enumerate() {
            let dominated = jumps.iter().enumerate().any(|(j, &(r2, j2))| {
                j != i && r2.abs_diff(row) <= k && (j2 > jump || (j2 == jump && r2 < row))
            });
            if !dominated {
                out.push(ContourPixel {
                    col: col as u32,
                    row: row as u32,
                    jump,
                });
            }
        }
    }
    chain(cands, cfg)
}

/// Mean of up to `k` consecutive valid rows starting at `row` and moving down
/// (`down`) or up.
fn side_mean(vals: &[Option<f64>], row: usize, k: usize, down: bool) -> f64 {
    let (mut s, mut n) = (0.0, 0.0);
    let mut r = row as i64;
    while n < k as f64 && r >= 0 && (r as usize) < vals.len() {
        match vals[r as usize] {
            Some(v) => {
                s += v;
                n += 1.0;
            }
            None => break,
        }
        r += if down { 1 } else { -1 };
    }
    s / n
}

/// Links candidates in nearby columns with similar rows, keeps chains that
/// span enough columns.
fn chain(cands: Vec<Vec<ContourPixel>>, cfg: &StereoDetectorConfig) -> Vec<RimContour> {
    let flat: Vec<ContourPixel> = cands.iter().flatten().copied().collect();
    let mut offset = Vec::with_capacity(cands.len() + 1);
    offset.push(0);
    for c in &cands {
        offset.push(offset.last().unwrap() + c.len());
    }
    let mut parent: Vec<usize> = (0..flat.len()).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let reach = cfg.contour_col_gap_px + 1;
    for col in 0..cands.len() {
        for a in offset[col]..offset[col + 1] {
            for c2 in col + 1..(col + 1 + reach).min(cands.len()) {
                for b in offset[c2]..offset[c2 + 1] {
                    if flat[a].row.abs_diff(flat[b].row) as usize <= cfg.contour_row_tol_px {
                        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                        if ra != rb {
                            parent[ra.max(rb)] = ra.min(rb);
                        }
                    }
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<ContourPixel>> = Default::default();
    for i in 0..flat.len() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(flat[i]);
    }
    let mut out = Vec::new();
    for (_, mut px) in groups {
        px.sort_by(|a, b| a.col.cmp(&b.col).then(b.jump.total_cmp(&a.jump)));
        // one pixel per column, the strongest
        px.dedup_by_key(|p| p.col);
        if px.len() < cfg.min_contour_cols {
            continue;
        }
        let mean_jump = px.iter().map(|p| p.jump).sum::<f64>() / px.len() as f64;
        out.push(RimContour { pixels: px, mean_jump });
    }
    out
}
