//! Simulate a LIDAR scan of a crater and save it as PLY.
//!
//! cargo run --release --example lidar_scan -- [diameter_m] [range_m] [out.ply]

use std::path::PathBuf;

use craterloc::cloud::ply::{write_ply, PlyFormat};
use craterloc::sensor::{simulate_lidar, LidarConfig};
use craterloc::terrain::{synthesize_scene, CraterSpec, SceneParams, DEFAULT_CELL_SIZE, DEFAULT_ROUGHNESS};
use craterloc::Pose2;

fn main() -> craterloc::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let d: f64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(10.0);
    let range: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(10.0);
    let out = PathBuf::from(args.get(2).map(String::as_str).unwrap_or("scan.ply"));

    let dist = range + 0.5 * d;
    let scene = synthesize_scene(
        &SceneParams::new(vec![CraterSpec::new(1, [0.0, 0.0], d)], 2.0 * (dist + 10.0), DEFAULT_CELL_SIZE, DEFAULT_ROUGHNESS, 3)
            .with_rover_pose(Pose2::new(-dist, 0.0, 0.0)),
    )?;
    let cfg = LidarConfig::default();
    let t = std::time::Instant::now();
    let cloud = simulate_lidar(&scene, &cfg, 3)?;
    println!("{} of {} rays returned in {:.2?}", cloud.len(), cfg.ray_count(), t.elapsed());

    // returns on the crater footprint, in the rover frame
    let on_crater = cloud
        .points
        .iter()
        .filter(|p| (p.x - dist).hypot(p.y) < 0.5 * d)
        .count();
    println!("{on_crater} returns inside the rim");
    write_ply(&out, &cloud, PlyFormat::BinaryLittleEndian)?;
    println!("wrote {}", out.display());
    Ok(())
}
