//! Detection probability and centre error over a sweep grid.
//!
//! cargo run --release --example kpp_sweep -- [lidar|stereo] [preset] [seeds] [out_dir]

use std::path::PathBuf;

use craterloc::eval::{emit_report, run_sweep, ReportFormat, SweepConfig, SweepGrid};
use craterloc::localizer::SigmaTable;
use craterloc::Method;

fn main() -> craterloc::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let detector = match args.first().map(String::as_str).unwrap_or("lidar") {
        "stereo" => Method::Stereo,
        _ => Method::Lidar,
    };
    let preset = args.get(1).map(String::as_str).unwrap_or("kpp");
    let seeds = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(8);
    let grid = SweepGrid::preset(preset, seeds)?;
    println!("{detector:?} sweep: {} trials", grid.trial_count());

    let report = run_sweep(detector, &grid, &SweepConfig::default(), 1)?;
    println!("{:>6} {:>6} {:>8} {:>16} {:>8}", "D", "range", "Pd", "95% interval", "3sig");
    for c in &report.cells {
        println!(
            "{:>6} {:>6} {:>8.2} {:>7.2}..{:<7.2} {:>8.2}",
            c.diameter_m,
            c.range_m,
            c.pd,
            c.pd_low,
            c.pd_high,
            3.0 * c.rms_error_m
        );
    }
    println!("3-sigma over {:?} m ranges:", report.sigma_ranges_m);
    for d in &report.diameters {
        let reference = d.reference_three_sigma_m.map(|r| format!("{r:.2}")).unwrap_or_else(|| "-".into());
        println!("  D {:>4}: {:.2} m from {} hits (reference {reference})", d.diameter_m, d.three_sigma_m, d.true_positives);
    }
    if let Ok(table) = SigmaTable::from_report(&report, 3) {
        println!("per-axis sigma table: {}", serde_json::to_string(&table.sigma_m).unwrap());
    }
    if let Some(dir) = args.get(3) {
        for f in emit_report(&report, &PathBuf::from(dir), ReportFormat::All)? {
            println!("wrote {}", f.display());
        }
    }
    Ok(())
}
