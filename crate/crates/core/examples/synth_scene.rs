//! Synthesize a single-crater scene and write it to disk.
//!
//! cargo run --release --example synth_scene -- [diameter_m] [range_m] [out_dir]

use std::path::PathBuf;

use craterloc::terrain::io::write_scene;
use craterloc::terrain::{synthesize_scene, CraterSpec, SceneParams, DEFAULT_CELL_SIZE, DEFAULT_ROUGHNESS};
use craterloc::Pose2;

fn main() -> craterloc::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let d: f64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(10.0);
    let range: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(10.0);
    let out = PathBuf::from(args.get(2).map(String::as_str).unwrap_or("scene_out"));

    // rover sits `range` short of the near rim, facing +x
    let dist = range + 0.5 * d;
    let params = SceneParams::new(vec![CraterSpec::new(1, [0.0, 0.0], d)], 2.0 * (dist + 10.0), DEFAULT_CELL_SIZE, DEFAULT_ROUGHNESS, 7)
        .with_rover_pose(Pose2::new(-dist, 0.0, 0.0));
    let scene = synthesize_scene(&params)?;

    let hf = &scene.heightfield;
    let (lo, hi) = hf.elevation.iter().fold((f32::MAX, f32::MIN), |(a, b), &z| (a.min(z), b.max(z)));
    let c = &scene.craters[0];
    println!("{} x {} cells at {} m", hf.n_cols, hf.n_rows, hf.cell_size);
    println!("elevation {lo:.2} .. {hi:.2} m");
    println!("crater D {:.1} m, depth {:.2} m, rim {:.2} m", c.diameter, c.depth, c.rim_height);
    write_scene(&out, &scene)?;
    println!("wrote {}", out.display());
    Ok(())
}
