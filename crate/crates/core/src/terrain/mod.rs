//! Synthetic cratered terrain with exact ground truth.

mod heightfield;
pub mod io;
mod noise;
mod profile;
mod scene;

pub use heightfield::{HeightField, RasterHeader};
pub use noise::FractalNoise;
pub use profile::{crater_profile, CraterSpec, DEFAULT_DEPTH_RATIO, DEFAULT_RIM_RATIO};
pub use scene::{synthesize_scene, SceneParams, SceneTruth, DEFAULT_CELL_SIZE, DEFAULT_ROUGHNESS};
