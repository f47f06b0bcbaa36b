use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use super::HeightField;

/// Random-phase spectral synthesis of a fractal surface.
///
/// Octaves start at `min_wavelength` and double; amplitude scales as
/// `wavelength^hurst`. The rendered raster is rescaled to zero mean and the
/// requested RMS, so the RMS holds exactly over the generated footprint.
#[derive(Debug, Clone)]
pub struct FractalNoise {
    pub min_wavelength: f64,
    pub octaves: usize,
    pub components_per_octave: usize,
    pub hurst: f64,
}

impl Default for FractalNoise {
    fn default() -> Self {
        Self {
            min_wavelength: 1.0,
            octaves: 4,
            components_per_octave: 8,
            hurst: 0.8,
        }
    }
}

struct Wave {
    kx: f64,
    ky: f64,
    phase: f64,
    amplitude: f64,
}

impl FractalNoise {
    fn waves(&self, seed: u64) -> Vec<Wave> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(self.octaves * self.components_per_octave);
        for o in 0..self.octaves {
            let wavelength = self.min_wavelength * 2f64.powi(o as i32);
            let k = 2.0 * PI / wavelength;
            let amplitude = wavelength.powf(self.hurst);
            for _ in 0..self.components_per_octave {
                let dir = rng.random::<f64>() * 2.0 * PI;
                // jitter wavenumber within the octave to avoid a line spectrum
                let kk = k * (1.0 + 0.3 * (rng.random::<f64>() - 0.5));
                out.push(Wave {
                    kx: kk * dir.cos(),
                    ky: kk * dir.sin(),
                    phase: rng.random::<f64>() * 2.0 * PI,
                    amplitude,
                });
            }
        }
        out
    }

    /// Adds noise with the given RMS to every cell of `hf`.
    pub fn add_to(&self, hf: &mut HeightField, rms: f64, seed: u64) {
        if rms <= 0.0 || hf.elevation.is_empty() {
            return;
        }
        let n_cols = hf.n_cols;
        let mut field = vec![0.0f64; hf.elevation.len()];
        let xs: Vec<f64> = (0..n_cols).map(|c| hf.x_of(c)).collect();
        let mut sx = vec![0.0; n_cols];
        let mut cx = vec![0.0; n_cols];
        for w in self.waves(seed) {
            for c in 0..n_cols {
                let (s, co) = (w.kx * xs[c] + w.phase).sin_cos();
                sx[c] = s * w.amplitude;
                cx[c] = co * w.amplitude;
            }
            for r in 0..hf.n_rows {
                let (sy, cy) = (w.ky * hf.y_of(r)).sin_cos();
                let row = &mut field[r * n_cols..(r + 1) * n_cols];
                for c in 0..n_cols {
                    // sin(a + b) = sin a cos b + cos a sin b
                    row[c] += sx[c] * cy + cx[c] * sy;
                }
            }
        }
        let n = field.len() as f64;
        let mean = field.iter().sum::<f64>() / n;
        let var = field.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let scale = if var > 0.0 { rms / var.sqrt() } else { 0.0 };
        for (z, v) in hf.elevation.iter_mut().zip(&field) {
            *z += ((v - mean) * scale) as f32;
        }
    }
}
