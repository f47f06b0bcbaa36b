use crate::cloud::Vec3;
use crate::terrain::HeightField;

/// Ray/heightfield intersection by fixed-step marching with bisection.
/// Blocks whose maximum elevation lies below the ray are skipped whole.
pub(crate) struct TerrainTracer<'a> {
    hf: &'a HeightField,
    block: usize,
    nbx: usize,
    nby: usize,
    block_max: Vec<f32>,
    global_max: f64,
    step: f64,
    block_lip: Vec<f64>,
    inv_block_width: f64,
}

const BLOCK: usize = 16;
const BISECT_ITERS: usize = 30;

impl<'a> TerrainTracer<'a> {
    pub fn new(hf: &'a HeightField) -> Self {
        let cells_x = hf.n_cols.saturating_sub(1).max(1);
        let cells_y = hf.n_rows.saturating_sub(1).max(1);
        let nbx = cells_x.div_ceil(BLOCK);
        let nby = cells_y.div_ceil(BLOCK);
        let mut block_max = vec![f32::NEG_INFINITY; nbx * nby];
        for by in 0..nby {
            let r0 = by * BLOCK;
            let r1 = ((by + 1) * BLOCK).min(hf.n_rows - 1);
            for bx in 0..nbx {
                let c0 = bx * BLOCK;
                let c1 = ((bx + 1) * BLOCK).min(hf.n_cols - 1);
                let mut m = f32::NEG_INFINITY;
                for r in r0..=r1 {
                    let row = &hf.elevation[hf.index(r, c0)..=hf.index(r, c1)];
                    for &z in row {
                        m = m.max(z);
                    }
                }
                block_max[by * nbx + bx] = m;
            }
        }
        // per-block bound on the bilinear surface gradient
        let mut block_lip = vec![0.0f64; nbx * nby];
        for by in 0..nby {
            let r0 = by * BLOCK;
            let r1 = ((by + 1) * BLOCK).min(hf.n_rows - 1);
            for bx in 0..nbx {
                let c0 = bx * BLOCK;
                let c1 = ((bx + 1) * BLOCK).min(hf.n_cols - 1);
                let (mut gx, mut gy) = (0.0f32, 0.0f32);
                for r in r0..=r1 {
                    for c in c0..=c1 {
                        let z = hf.elevation[hf.index(r, c)];
                        if c < c1 {
                            gx = gx.max((hf.elevation[hf.index(r, c + 1)] - z).abs());
                        }
                        if r < r1 {
                            gy = gy.max((hf.elevation[hf.index(r + 1, c)] - z).abs());
                        }
                    }
                }
                block_lip[by * nbx + bx] = (gx as f64).hypot(gy as f64) / hf.cell_size;
            }
        }
        let global_max = block_max.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
        Self {
            hf,
            block: BLOCK,
            nbx,
            nby,
            block_max,
            global_max,
            step: hf.cell_size / 2.0,
            block_lip,
            inv_block_width: 1.0 / (hf.cell_size * BLOCK as f64),
        }
    }

    fn block_of(&self, x: f64, y: f64) -> (usize, usize) {
        let fx = (x - self.hf.origin_xy[0]) * self.inv_block_width;
        let fy = (y - self.hf.origin_xy[1]) * self.inv_block_width;
        ((fx.max(0.0) as usize).min(self.nbx - 1), (fy.max(0.0) as usize).min(self.nby - 1))
    }

    /// Ray parameter to the point where the ray leaves block `(bx, by)` horizontally.
    fn block_exit(&self, o: &Vec3, d: &Vec3, bx: usize, by: usize) -> f64 {
        let w = self.hf.cell_size * self.block as f64;
        let x0 = self.hf.origin_xy[0] + bx as f64 * w;
        let y0 = self.hf.origin_xy[1] + by as f64 * w;
        let mut t = f64::INFINITY;
        if d.x > 0.0 {
            t = t.min((x0 + w - o.x) / d.x);
        } else if d.x < 0.0 {
            t = t.min((x0 - o.x) / d.x);
        }
        if d.y > 0.0 {
            t = t.min((y0 + w - o.y) / d.y);
        } else if d.y < 0.0 {
            t = t.min((y0 - o.y) / d.y);
        }
        t
    }

    /// Distance along unit direction `d` from `o` to the first terrain crossing,
    /// or `None` if the ray leaves the raster or exceeds `max_t` first.
    pub fn cast(&self, o: &Vec3, d: &Vec3, max_t: f64) -> Option<f64> {
        let f = |t: f64| -> Option<f64> {
            let p = o + d * t;
            self.hf.sample(p.x, p.y).map(|h| p.z - h)
        };
        let horiz = d.x.hypot(d.y);
        let down = (-d.z).max(0.0);
        let mut t = 0.0;
        let mut above = f(t)?;
        if above <= 0.0 {
            return None;
        }
        let mut t_prev;
        loop {
            let p = o + d * t;
            if d.z >= 0.0 && p.z > self.global_max {
                return None;
            }
            let (bx, by) = self.block_of(p.x, p.y);
            let b = by * self.nbx + bx;
            let t_exit = self.block_exit(o, d, bx, by);
            let top = self.block_max[b] as f64 + 1e-6;
            if p.z > top && o.z + d.z * t_exit > top {
                // segment inside this block stays above all of it
                t_prev = t_exit;
                t = t_exit + 1e-9;
                if t > max_t {
                    return None;
                }
                above = f(t)?;
                if above <= 0.0 {
                    return Some(self.bisect(&f, t_prev, None, t, above));
                }
                continue;
            }
            // the slope bound rules out a crossing within `safe`, but only inside this block
            let closing = down + self.block_lip[b] * horiz;
            let safe = if closing > 0.0 { 0.95 * above / closing } else { f64::INFINITY };
            let step = safe.min(t_exit - t + 1e-9).max(self.step);
            if !step.is_finite() {
                return None;
            }
            t_prev = t;
            t += step;
            if t > max_t {
                return None;
            }
            let prev = above;
            above = f(t)?;
            if above <= 0.0 {
                return Some(self.bisect(&f, t_prev, Some(prev), t, above));
            }
        }
    }

    /// Bracketed root refinement (Illinois false position, bisection fallback).
    fn bisect(&self, f: &impl Fn(f64) -> Option<f64>, mut lo: f64, f_lo: Option<f64>, mut hi: f64, f_hi: f64) -> f64 {
        let mut f_lo = f_lo.or_else(|| f(lo)).unwrap_or(1.0).max(0.0);
        let mut f_hi = f_hi.min(0.0);
        let mut side = 0i8;
        for _ in 0..BISECT_ITERS {
            if hi - lo < 1e-5 {
                break;
            }
            let denom = f_lo - f_hi;
            let mut mid = if denom > 0.0 { lo + (hi - lo) * f_lo / denom } else { 0.5 * (lo + hi) };
            if !(mid > lo && mid < hi) {
                mid = 0.5 * (lo + hi);
            }
            let v = match f(mid) {
                Some(v) => v,
                None => -1.0,
            };
            if v.abs() < 1e-7 {
                return mid;
            }
            if v > 0.0 {
                lo = mid;
                f_lo = v;
                if side == 1 {
                    f_hi *= 0.5;
                }
                side = 1;
            } else {
                hi = mid;
                f_hi = v;
                if side == -1 {
                    f_lo *= 0.5;
                }
                side = -1;
            }
        }
        0.5 * (lo + hi)
    }
}
