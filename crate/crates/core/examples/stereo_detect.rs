//! Detect a crater from a simulated disparity map, no map needed.
//!
//! cargo run --release --example stereo_detect -- [diameter_m] [range_m] [seed]

use craterloc::sensor::{simulate_stereo, StereoConfig};
use craterloc::stereo::{detect_stereo_traced, StereoDetectorConfig};
use craterloc::terrain::{synthesize_scene, CraterSpec, SceneParams, DEFAULT_CELL_SIZE, DEFAULT_ROUGHNESS};
use craterloc::Pose2;

fn main() -> craterloc::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let d: f64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(10.0);
    let range: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(8.0);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);

    let dist = range + 0.5 * d;
    let scene = synthesize_scene(
        &SceneParams::new(vec![CraterSpec::new(1, [0.0, 0.0], d)], 2.0 * (dist + 10.0), DEFAULT_CELL_SIZE, DEFAULT_ROUGHNESS, seed)
            .with_rover_pose(Pose2::new(-dist, 0.0, 0.0)),
    )?;
    let (map, _) = simulate_stereo(&scene, &StereoConfig::default(), seed)?;
    let valid = map.data.iter().filter(|v| v.is_finite()).count();
    println!("{}x{} disparity map, {valid} valid pixels", map.width, map.height);

    let (dets, trace) = detect_stereo_traced(&map, &scene.rover_pose, &StereoDetectorConfig::default())?;
    println!("{} far-wall regions, {} rim contours", trace.regions.len(), trace.contours.len());
    for det in &dets {
        println!(
            "crater at ({:.2}, {:.2}), D {:.1} m, centre error {:.2} m",
            det.center_xy[0],
            det.center_xy[1],
            det.diameter,
            det.center_xy[0].hypot(det.center_xy[1])
        );
    }
    Ok(())
}
