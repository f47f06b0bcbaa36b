use serde::{Deserialize, Serialize};

use super::{crater_profile, CraterSpec, FractalNoise, HeightField};
use crate::error::{Error, Result};
use crate::pose::{dist2, Pose2};

/// Default terrain raster resolution.
pub const DEFAULT_CELL_SIZE: f64 = 0.05;
/// Default background roughness (RMS, metres).
pub const DEFAULT_ROUGHNESS: f64 = 0.03;

/// Ground-truth world model: terrain raster plus the craters and rover pose
/// that generated it.
#[derive(Debug, Clone)]
pub struct SceneTruth {
    pub heightfield: HeightField,
    pub craters: Vec<CraterSpec>,
    pub rover_pose: Pose2,
    pub seed: u64,
}

/// Inputs to [`synthesize_scene`]. The footprint is a square of side `extent`
/// centred on `center`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneParams {
    pub craters: Vec<CraterSpec>,
    pub extent: f64,
    pub cell_size: f64,
    pub roughness: f64,
    pub seed: u64,
    pub center: [f64; 2],
    pub rover_pose: Pose2,
}

impl SceneParams {
    pub fn new(craters: Vec<CraterSpec>, extent: f64, cell_size: f64, roughness: f64, seed: u64) -> Self {
        Self {
            craters,
            extent,
            cell_size,
            roughness,
            seed,
            center: [0.0, 0.0],
            rover_pose: Pose2::new(0.0, 0.0, 0.0),
        }
    }

    pub fn with_center(mut self, center: [f64; 2]) -> Self {
        self.center = center;
        self
    }

    pub fn with_rover_pose(mut self, pose: Pose2) -> Self {
        self.rover_pose = pose;
        self
    }
}

/// Builds a cratered heightfield: fractal background plus the sum of crater
/// profiles. Deterministic for fixed inputs.
pub fn synthesize_scene(params: &SceneParams) -> Result<SceneTruth> {
    validate(params)?;
    let n = (params.extent / params.cell_size).round() as usize + 1;
    let half = 0.5 * (n - 1) as f64 * params.cell_size;
    let origin = [params.center[0] - half, params.center[1] - half];
    let mut hf = HeightField::flat(origin, params.cell_size, n, n);
    FractalNoise::default().add_to(&mut hf, params.roughness, params.seed);

    for crater in &params.craters {
        let support = crater.diameter;
        let c_lo = ((crater.center_xy[0] - support - origin[0]) / params.cell_size).floor().max(0.0) as usize;
        let c_hi = (((crater.center_xy[0] + support - origin[0]) / params.cell_size).ceil() as usize).min(n - 1);
        let r_lo = ((crater.center_xy[1] - support - origin[1]) / params.cell_size).floor().max(0.0) as usize;
        let r_hi = (((crater.center_xy[1] + support - origin[1]) / params.cell_size).ceil() as usize).min(n - 1);
        for row in r_lo..=r_hi {
            let dy = hf.y_of(row) - crater.center_xy[1];
            for col in c_lo..=c_hi {
                let dx = hf.x_of(col) - crater.center_xy[0];
                let r = (dx * dx + dy * dy).sqrt();
                if r < support {
                    let i = hf.index(row, col);
                    hf.elevation[i] += crater_profile(crater, r) as f32;
                }
            }
        }
    }

    Ok(SceneTruth {
        heightfield: hf,
        craters: params.craters.clone(),
        rover_pose: params.rover_pose,
        seed: params.seed,
    })
}

fn validate(p: &SceneParams) -> Result<()> {
    let bad = |m: String| Err(Error::InvalidScene(m));
    if !(p.cell_size > 0.0) || !(p.extent > p.cell_size) {
        return bad(format!("need extent > cell_size > 0 (extent={}, cell={})", p.extent, p.cell_size));
    }
    if !(p.roughness >= 0.0) {
        return bad(format!("roughness must be >= 0 (got {})", p.roughness));
    }
    let half = 0.5 * p.extent;
    let inside = |x: f64, y: f64, margin: f64| {
        (x - p.center[0]).abs() + margin <= half && (y - p.center[1]).abs() + margin <= half
    };
    for c in &p.craters {
        c.validate()?;
        if p.extent < 2.0 * c.diameter {
            return bad(format!("extent {} smaller than twice crater {} diameter", p.extent, c.id));
        }
        if p.cell_size > c.diameter / 20.0 + 1e-12 {
            return bad(format!("cell size {} too coarse for crater {} (D={})", p.cell_size, c.id, c.diameter));
        }
        if !inside(c.center_xy[0], c.center_xy[1], c.diameter) {
            return bad(format!("crater {} extends past the footprint", c.id));
        }
    }
    for (i, a) in p.craters.iter().enumerate() {
        for b in &p.craters[i + 1..] {
            if dist2(a.center_xy, b.center_xy) < a.radius() + b.radius() {
                return bad(format!("craters {} and {} overlap", a.id, b.id));
            }
        }
    }
    let pose = p.rover_pose;
    if !inside(pose.x, pose.y, 0.0) {
        return bad("rover pose outside the footprint".into());
    }
    for c in &p.craters {
        if dist2(pose.position(), c.center_xy) <= c.radius() + 1.0 {
            return bad(format!("rover pose inside crater {} bowl", c.id));
        }
    }
    Ok(())
}
