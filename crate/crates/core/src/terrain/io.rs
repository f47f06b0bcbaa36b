//! Scene files: `heightfield.f32` (raw little-endian f32, row-major),
//! `heightfield.json` (raster sidecar) and `truth.json` (craters, pose, seed).

use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

use super::{CraterSpec, HeightField, RasterHeader, SceneTruth};
use crate::error::{Error, Result};
use crate::pose::Pose2;

pub const HEIGHTFIELD_RAW: &str = "heightfield.f32";
pub const HEIGHTFIELD_JSON: &str = "heightfield.json";
pub const TRUTH_JSON: &str = "truth.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthFile {
    pub craters: Vec<CraterSpec>,
    pub rover_pose: Pose2,
    pub seed: u64,
    pub heightfield: String,
}

pub fn write_f32_raw(path: &Path, data: &[f32]) -> Result<()> {
    let mut bytes = Vec::with_capacity(data.len() * 4);
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_f32_raw(path: &Path, expected_len: usize) -> Result<Vec<f32>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected_len * 4 {
        return Err(Error::Parse {
            offset: bytes.len().min(expected_len * 4) as u64,
            message: format!(
                "{}: expected {} bytes of f32 data, found {}",
                path.display(),
                expected_len * 4,
                bytes.len()
            ),
        });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

pub fn write_heightfield(dir: &Path, hf: &HeightField) -> Result<()> {
    write_f32_raw(&dir.join(HEIGHTFIELD_RAW), &hf.elevation)?;
    write_json(&dir.join(HEIGHTFIELD_JSON), &hf.header())
}

pub fn read_heightfield(dir: &Path) -> Result<HeightField> {
    let header: RasterHeader = read_json(&dir.join(HEIGHTFIELD_JSON))?;
    let elevation = read_f32_raw(&dir.join(HEIGHTFIELD_RAW), header.n_rows * header.n_cols)?;
    Ok(HeightField {
        origin_xy: [header.origin_x_m, header.origin_y_m],
        cell_size: header.cell_size_m,
        n_rows: header.n_rows,
        n_cols: header.n_cols,
        elevation,
    })
}

/// Writes the three scene files into `dir` (created if missing).
pub fn write_scene(dir: &Path, scene: &SceneTruth) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_heightfield(dir, &scene.heightfield)?;
    let truth = TruthFile {
        craters: scene.craters.clone(),
        rover_pose: scene.rover_pose,
        seed: scene.seed,
        heightfield: HEIGHTFIELD_RAW.into(),
    };
    write_json(&dir.join(TRUTH_JSON), &truth)
}

pub fn read_scene(dir: &Path) -> Result<SceneTruth> {
    let truth: TruthFile = read_json(&dir.join(TRUTH_JSON))?;
    Ok(SceneTruth {
        heightfield: read_heightfield(dir)?,
        craters: truth.craters,
        rover_pose: truth.rover_pose,
        seed: truth.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terrain::{synthesize_scene, SceneParams};

    #[test]
    fn scene_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let crater = CraterSpec::new(4, [5.0, 0.0], 5.0);
        let params = SceneParams::new(vec![crater], 20.0, 0.1, 0.02, 9).with_rover_pose(Pose2::new(-5.0, 0.0, 0.3));
        let scene = synthesize_scene(&params).unwrap();
        write_scene(dir.path(), &scene).unwrap();
        let back = read_scene(dir.path()).unwrap();
        assert_eq!(back.heightfield, scene.heightfield);
        assert_eq!(back.craters, scene.craters);
        assert_eq!(back.seed, 9);
    }

    #[test]
    fn truncated_raster_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.f32");
        write_f32_raw(&p, &[1.0, 2.0]).unwrap();
        match read_f32_raw(&p, 3) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 8),
            other => panic!("{other:?}"),
        }
    }
}
