use serde::{Deserialize, Serialize};

/// Raster elevation grid. Samples are node-registered: cell `(row, col)` holds
/// the elevation at `(origin_x + col * cell_size, origin_y + row * cell_size)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightField {
    pub origin_xy: [f64; 2],
    pub cell_size: f64,
    pub n_rows: usize,
    pub n_cols: usize,
    pub elevation: Vec<f32>,
}

/// JSON sidecar describing a raw little-endian f32 raster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterHeader {
    pub origin_x_m: f64,
    pub origin_y_m: f64,
    pub cell_size_m: f64,
    pub n_rows: usize,
    pub n_cols: usize,
    pub dtype: String,
    pub layout: String,
}

impl HeightField {
    pub fn flat(origin_xy: [f64; 2], cell_size: f64, n_rows: usize, n_cols: usize) -> Self {
        Self {
            origin_xy,
            cell_size,
            n_rows,
            n_cols,
            elevation: vec![0.0; n_rows * n_cols],
        }
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.n_cols + col
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.elevation[self.index(row, col)] as f64
    }

    #[inline]
    pub fn x_of(&self, col: usize) -> f64 {
        self.origin_xy[0] + col as f64 * self.cell_size
    }

    #[inline]
    pub fn y_of(&self, row: usize) -> f64 {
        self.origin_xy[1] + row as f64 * self.cell_size
    }

    pub fn max_x(&self) -> f64 {
        self.x_of(self.n_cols.saturating_sub(1))
    }

    pub fn max_y(&self) -> f64 {
        self.y_of(self.n_rows.saturating_sub(1))
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.origin_xy[0] && y >= self.origin_xy[1] && x <= self.max_x() && y <= self.max_y()
    }

    /// Bilinear elevation at `(x, y)`, or `None` outside the raster.
    #[inline]
    pub fn sample(&self, x: f64, y: f64) -> Option<f64> {
        let fx = (x - self.origin_xy[0]) / self.cell_size;
        let fy = (y - self.origin_xy[1]) / self.cell_size;
        let max_c = (self.n_cols - 1) as f64;
        let max_r = (self.n_rows - 1) as f64;
        if !(fx >= 0.0 && fy >= 0.0 && fx <= max_c && fy <= max_r) {
            return None;
        }
        let c0 = (fx as usize).min(self.n_cols.saturating_sub(2));
        let r0 = (fy as usize).min(self.n_rows.saturating_sub(2));
        let tx = fx - c0 as f64;
        let ty = fy - r0 as f64;
        let i = self.index(r0, c0);
        let z00 = self.elevation[i] as f64;
        let z01 = self.elevation[i + 1] as f64;
        let z10 = self.elevation[i + self.n_cols] as f64;
        let z11 = self.elevation[i + self.n_cols + 1] as f64;
        let a = z00 + (z01 - z00) * tx;
        let b = z10 + (z11 - z10) * tx;
        Some(a + (b - a) * ty)
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f32::INFINITY;
        let mut hi = f32::NEG_INFINITY;
        for &z in &self.elevation {
            lo = lo.min(z);
            hi = hi.max(z);
        }
        (lo as f64, hi as f64)
    }

    pub fn header(&self) -> RasterHeader {
        RasterHeader {
            origin_x_m: self.origin_xy[0],
            origin_y_m: self.origin_xy[1],
            cell_size_m: self.cell_size,
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            dtype: "f32le".into(),
            layout: "row-major".into(),
        }
    }
}
