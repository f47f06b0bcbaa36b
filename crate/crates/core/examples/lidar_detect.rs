//! Detect a mapped crater in a simulated LIDAR scan.
//!
//! cargo run --release --example lidar_detect -- [diameter_m] [range_m] [seed]

use craterloc::landmarks::{db_from_scene, DEFAULT_MAP_NOISE};
use craterloc::lidar::{detect_lidar_traced, LidarDetectorConfig};
use craterloc::localizer::RoverState;
use craterloc::sensor::{simulate_lidar, LidarConfig};
use craterloc::terrain::{synthesize_scene, CraterSpec, SceneParams, DEFAULT_CELL_SIZE, DEFAULT_ROUGHNESS};
use craterloc::Pose2;

fn main() -> craterloc::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let d: f64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(10.0);
    let range: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(12.0);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);

    let dist = range + 0.5 * d;
    let scene = synthesize_scene(
        &SceneParams::new(vec![CraterSpec::new(1, [0.0, 0.0], d)], 2.0 * (dist + 10.0), DEFAULT_CELL_SIZE, DEFAULT_ROUGHNESS, seed)
            .with_rover_pose(Pose2::new(-dist, 0.0, 0.0)),
    )?;
    let cloud = simulate_lidar(&scene, &LidarConfig::default(), seed)?;
    let db = db_from_scene(&scene, DEFAULT_MAP_NOISE, seed);
    let prior = RoverState::new([-dist, 0.0], 0.0, 1.0);

    let (dets, trace) = detect_lidar_traced(&cloud, &prior, &db, &LidarDetectorConfig::default())?;
    if let Some(t) = &trace {
        println!("{} points after crop, {} back-wall clusters", t.aligned.len(), t.clusters.len());
        for h in &t.hypotheses {
            match h {
                Ok(h) => println!("  rim hypothesis at ({:.2}, {:.2}), D {:.1} m", h.center_xy[0], h.center_xy[1], h.diameter_est),
                Err(e) => println!("  cluster rejected: {e}"),
            }
        }
    }
    for det in &dets {
        let err = det.center_xy[0].hypot(det.center_xy[1]);
        println!("landmark {:?}: centre error {err:.2} m, score {:.3}", det.landmark_id, det.score);
    }
    if dets.is_empty() {
        println!("no detection");
    }
    Ok(())
}
