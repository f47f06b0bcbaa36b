//! Build a landmark map with survey noise and query it around a point.
//!
//! cargo run --release --example landmark_query -- [x] [y] [radius_m]

use craterloc::landmarks::{LandmarkDb, LandmarkRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> craterloc::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let center = [args.first().copied().unwrap_or(0.0), args.get(1).copied().unwrap_or(0.0)];
    let radius = args.get(2).copied().unwrap_or(100.0);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let records = (0..20_000)
        .map(|id| {
            let d: f64 = rng.random_range(2.0..40.0);
            LandmarkRecord {
                id,
                x_m: rng.random_range(-5000.0..5000.0),
                y_m: rng.random_range(-5000.0..5000.0),
                diameter_m: d,
                depth_m: 0.2 * d,
            }
        })
        .collect();
    let db = LandmarkDb::new(records)?;

    let all = db.query_radius(center, radius, (0.0, f64::INFINITY));
    let usable = db.query_radius(center, radius, (5.0, 20.0));
    println!("{} craters within {radius} m of {center:?}, {} with D in 5..20 m", all.len(), usable.len());
    for r in usable.iter().take(10) {
        let dist = (r.x_m - center[0]).hypot(r.y_m - center[1]);
        println!("  #{:<6} D {:>5.1} m at {dist:>6.1} m", r.id, r.diameter_m);
    }
    Ok(())
}
