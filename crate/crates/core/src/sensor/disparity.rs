use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::StereoConfig;
use crate::error::{Error, Result};
use crate::terrain::io::{read_f32_raw, write_f32_raw};

/// Left-camera disparity raster. Invalid cells hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
    pub camera: StereoConfig,
}

/// JSON sidecar for a raw disparity raster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisparitySidecar {
    pub width: usize,
    pub height: usize,
    pub dtype: String,
    pub layout: String,
    pub invalid: String,
    pub camera: StereoConfig,
}

impl DisparityMap {
    pub fn new(width: usize, height: usize, data: Vec<f32>, camera: StereoConfig) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DegenerateDisparity(format!(
                "{} values for a {width}x{height} map",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().position(|d| d.is_finite() && *d <= 0.0 || d.is_infinite()) {
            return Err(Error::DegenerateDisparity(format!("cell {bad} holds non-positive disparity {}", data[bad])));
        }
        Ok(Self {
            width,
            height,
            data,
            camera,
        })
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> Option<f64> {
        let d = self.data[row * self.width + col];
        d.is_finite().then_some(d as f64)
    }

    pub fn valid_count(&self) -> usize {
        self.data.iter().filter(|d| d.is_finite()).count()
    }

    pub fn sidecar(&self) -> DisparitySidecar {
        DisparitySidecar {
            width: self.width,
            height: self.height,
            dtype: "f32le".into(),
            layout: "row-major".into(),
            invalid: "NaN".into(),
            camera: self.camera.clone(),
        }
    }
}

fn sidecar_path(raw: &Path) -> PathBuf {
    raw.with_extension("json")
}

/// Writes `raw` and a JSON sidecar next to it (same stem, `.json`).
pub fn write_disparity(raw: &Path, map: &DisparityMap) -> Result<()> {
    write_f32_raw(raw, &map.data)?;
    let side = sidecar_path(raw);
    let text = serde_json::to_string_pretty(&map.sidecar()).map_err(|e| Error::json(&side, e))?;
    fs::write(&side, text + "\n").map_err(|e| Error::io(&side, e))
}

/// Reads a disparity map given either the raw raster or its sidecar path.
pub fn read_disparity(path: &Path) -> Result<DisparityMap> {
    let (raw, side) = if path.extension().is_some_and(|e| e == "json") {
        (path.with_extension("f32"), path.to_path_buf())
    } else {
        (path.to_path_buf(), sidecar_path(path))
    };
    if !side.exists() {
        return Err(Error::InvalidConfig(format!(
            "disparity input needs a JSON sidecar at {} (dims and camera model)",
            side.display()
        )));
    }
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let meta: DisparitySidecar = serde_json::from_str(&text).map_err(|e| Error::json(&side, e))?;
    let data = read_f32_raw(&raw, meta.width * meta.height)?;
    DisparityMap::new(meta.width, meta.height, data, meta.camera)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_keeps_nan() {
        let dir = tempfile::tempdir().unwrap();
        let map = DisparityMap::new(2, 2, vec![1.0, f32::NAN, 2.5, 3.0], StereoConfig::default()).unwrap();
        let p = dir.path().join("d.f32");
        write_disparity(&p, &map).unwrap();
        let back = read_disparity(&dir.path().join("d.json")).unwrap();
        assert_eq!(back.get(0, 0), Some(1.0));
        assert_eq!(back.get(1, 0), None);
        assert_eq!(back.valid_count(), 3);
    }

    #[test]
    fn zero_fill_rejected() {
        assert!(DisparityMap::new(1, 1, vec![0.0], StereoConfig::default()).is_err());
    }
}
