//! Localize along a straight traverse using crater fixes.
//!
//! cargo run --release --example traverse -- [length_m] [seed] [lidar|stereo]

use craterloc::localizer::{run_traverse, TraverseConfig, TraverseWorld};
use craterloc::Method;

fn main() -> craterloc::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let length: f64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(200.0);
    let seed: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let method = match args.get(2).map(String::as_str) {
        Some("stereo") => Method::Stereo,
        _ => Method::Lidar,
    };

    let route = vec![[0.0, 0.0], [length, 0.0]];
    let mut world = TraverseWorld::along_route(&route, 4.0, (5.0, 20.0), seed)?;
    world.cell_size_m = 0.1;
    let db = world.landmark_db(0.5, seed ^ 0xDB);
    let cfg = TraverseConfig {
        method,
        ..TraverseConfig::default()
    };
    println!("{} landmarks along {length} m", db.len());

    let log = run_traverse(&world, &route, &cfg, &db, seed)?;
    println!("{:>6} {:>8} {:>8} {:>6} {:>8}", "dist", "error", "3sig", "fixes", "NEES");
    for s in log.steps.iter().filter(|s| s.sensed) {
        let [ex, ey] = s.error_xy();
        let nees = s.nees().map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
        println!("{:>6.0} {:>8.2} {:>8.2} {:>6} {:>8}", s.distance_m, ex.hypot(ey), s.three_sigma(), s.n_matches, nees);
    }
    Ok(())
}
