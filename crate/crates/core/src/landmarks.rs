//! Orbital crater landmark map with a uniform-grid spatial index.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::terrain::SceneTruth;

pub const DEFAULT_GRID_CELL: f64 = 50.0;
pub const DEFAULT_MAP_NOISE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkRecord {
    pub id: u64,
    pub x_m: f64,
    pub y_m: f64,
    pub diameter_m: f64,
    pub depth_m: f64,
}

impl LandmarkRecord {
    pub fn position(&self) -> [f64; 2] {
        [self.x_m, self.y_m]
    }
}

#[derive(Debug, Clone)]
pub struct LandmarkDb {
    records: Vec<LandmarkRecord>,
    cell: f64,
    grid: FxHashMap<(i64, i64), Vec<usize>>,
}

impl LandmarkDb {
    pub fn new(records: Vec<LandmarkRecord>) -> Result<Self> {
        Self::with_cell(records, DEFAULT_GRID_CELL)
    }

    pub fn with_cell(records: Vec<LandmarkRecord>, cell: f64) -> Result<Self> {
        if !(cell > 0.0) {
            return Err(Error::InvalidConfig(format!("grid cell must be positive, got {cell}")));
        }
        let mut seen = FxHashMap::default();
        let mut grid: FxHashMap<(i64, i64), Vec<usize>> = FxHashMap::default();
        for (i, r) in records.iter().enumerate() {
            if !(r.diameter_m > 0.0 && r.depth_m > 0.0 && r.x_m.is_finite() && r.y_m.is_finite()) {
                return Err(Error::InvalidConfig(format!("landmark {} has invalid geometry", r.id)));
            }
            if seen.insert(r.id, i).is_some() {
                return Err(Error::InvalidConfig(format!("duplicate landmark id {}", r.id)));
            }
            grid.entry(key(r.position(), cell)).or_default().push(i);
        }
        Ok(Self { records, cell, grid })
    }

    pub fn empty() -> Self {
        Self::new(Vec::new()).expect("empty db is valid")
    }

    pub fn records(&self) -> &[LandmarkRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&LandmarkRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Records within `radius` of `center` whose diameter lies in `diam_range`
    /// (inclusive). Results are ordered by id.
    pub fn query_radius(&self, center: [f64; 2], radius: f64, diam_range: (f64, f64)) -> Vec<&LandmarkRecord> {
        let mut out = Vec::new();
        if !(radius >= 0.0) {
            return out;
        }
        let lo = key([center[0] - radius, center[1] - radius], self.cell);
        let hi = key([center[0] + radius, center[1] + radius], self.cell);
        let r2 = radius * radius;
        for gx in lo.0..=hi.0 {
            for gy in lo.1..=hi.1 {
                let Some(ids) = self.grid.get(&(gx, gy)) else {
                    continue;
                };
                for &i in ids {
                    let r = &self.records[i];
                    let d2 = (r.x_m - center[0]).powi(2) + (r.y_m - center[1]).powi(2);
                    if d2 <= r2 && r.diameter_m >= diam_range.0 && r.diameter_m <= diam_range.1 {
                        out.push(r);
                    }
                }
            }
        }
        out.sort_by_key(|r| r.id);
        out
    }
}

fn key(p: [f64; 2], cell: f64) -> (i64, i64) {
    ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64)
}

/// One record per scene crater, positions perturbed by isotropic Gaussian
/// noise (orbital map registration error).
pub fn db_from_scene(scene: &SceneTruth, position_noise_sigma: f64, seed: u64) -> LandmarkDb {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, position_noise_sigma.max(0.0)).expect("finite sigma");
    let records = scene
        .craters
        .iter()
        .map(|c| {
            let (dx, dy) = if position_noise_sigma > 0.0 {
                (noise.sample(&mut rng), noise.sample(&mut rng))
            } else {
                (0.0, 0.0)
            };
            LandmarkRecord {
                id: c.id,
                x_m: c.center_xy[0] + dx,
                y_m: c.center_xy[1] + dy,
                diameter_m: c.diameter,
                depth_m: c.depth,
            }
        })
        .collect();
    LandmarkDb::new(records).expect("scene craters have unique ids and valid geometry")
}

pub fn write_jsonl(path: &Path, db: &LandmarkDb) -> Result<()> {
    let mut out = Vec::new();
    for r in db.records() {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::json(path, e))?;
        out.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}

/// Parses one JSON record per non-blank line. Errors carry the byte offset of
/// the offending line.
pub fn parse_jsonl(text: &str) -> Result<LandmarkDb> {
    let mut records = Vec::new();
    let mut offset = 0usize;
    for line in text.split_inclusive('\n') {
        let body = line.trim();
        if !body.is_empty() {
            let r: LandmarkRecord = serde_json::from_str(body).map_err(|e| Error::Parse {
                offset: offset as u64,
                message: format!("landmark record: {e}"),
            })?;
            records.push(r);
        }
        offset += line.len();
    }
    LandmarkDb::new(records)
}

pub fn read_jsonl(path: &Path) -> Result<LandmarkDb> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: u64, x: f64, y: f64, d: f64) -> LandmarkRecord {
        LandmarkRecord {
            id,
            x_m: x,
            y_m: y,
            diameter_m: d,
            depth_m: 0.2 * d,
        }
    }

    #[test]
    fn zero_radius_hits_exact_position() {
        let db = LandmarkDb::new(vec![rec(1, 49.999, -0.001, 10.0), rec(2, 10.0, 10.0, 5.0)]).unwrap();
        let hit = db.query_radius([49.999, -0.001], 0.0, (0.0, f64::INFINITY));
        assert_eq!(hit.len(), 1);
        assert_eq!(hit[0].id, 1);
        assert!(db.query_radius([10.0, 10.0], 1.0, (6.0, 20.0)).is_empty());
    }

    #[test]
    fn duplicate_ids_rejected() {
        assert!(LandmarkDb::new(vec![rec(1, 0.0, 0.0, 5.0), rec(1, 5.0, 0.0, 5.0)]).is_err());
    }

    #[test]
    fn jsonl_round_trip_and_offsets() {
        let db = LandmarkDb::new(vec![rec(3, 1.5, -2.25, 7.0), rec(9, 100.0, 0.1, 12.0)]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("db.jsonl");
        write_jsonl(&p, &db).unwrap();
        let back = read_jsonl(&p).unwrap();
        assert_eq!(back.records(), db.records());

        let text = "{\"id\":1,\"x_m\":0,\"y_m\":0,\"diameter_m\":5,\"depth_m\":1}\n{\"id\":2}\n";
        match parse_jsonl(text) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset as usize, text.find("{\"id\":2").unwrap()),
            other => panic!("{other:?}"),
        }
    }
}
