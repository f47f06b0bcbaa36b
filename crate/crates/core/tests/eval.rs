use craterloc::eval::*;
use craterloc::sensor::{LidarConfig, StereoConfig};
use craterloc::Method;

fn tiny_grid(diameters: Vec<f64>, ranges: Vec<f64>, seeds: usize) -> SweepGrid {
    SweepGrid {
        diameters_m: diameters,
        ranges_m: ranges,
        approach_deg: vec![0.0, 90.0, 180.0, 270.0],
        seeds_per_cell: seeds,
    }
}

#[test]
fn dense_preset_shape() {
    let g = SweepGrid::preset("dense", 40).unwrap();
    assert_eq!(g.diameters_m, vec![5.0, 7.0, 10.0, 12.0, 15.0, 17.0, 20.0]);
    assert_eq!(g.ranges_m.len(), 16);
    assert_eq!(g.ranges_m[0], 5.0);
    assert_eq!(g.ranges_m[15], 20.0);
    assert_eq!(g.approach_deg.len(), 4);
    assert_eq!(g.trial_count(), 7 * 16 * 40);
    assert!(SweepGrid::preset("nope", 1).is_err());
}

#[test]
fn invalid_grid_rejected() {
    assert!(tiny_grid(vec![], vec![5.0], 1).validate().is_err());
    assert!(tiny_grid(vec![5.0], vec![5.0], 0).validate().is_err());
    assert!(run_trials(Method::Lidar, &tiny_grid(vec![5.0], vec![], 1), &SweepConfig::default(), 0).is_err());
}

#[test]
fn true_positive_radius_rule() {
    assert_eq!(true_positive_radius(2.0), 1.0);
    assert_eq!(true_positive_radius(4.0), 1.0);
    assert_eq!(true_positive_radius(20.0), 5.0);
}

#[test]
fn trial_geometry_puts_near_rim_at_range() {
    let cfg = SweepConfig {
        roughness_m: 0.0,
        cell_size_m: 0.1,
        ..SweepConfig::default()
    };
    for approach in [0.0, 90.0, 225.0] {
        let s = trial_scene(10.0, 12.0, approach, 3, &cfg).unwrap();
        let p = s.rover_pose.position();
        assert!((p[0].hypot(p[1]) - 17.0).abs() < 1e-9);
        // rover faces the crater
        let h = s.rover_pose.heading;
        assert!((h.cos() * -p[0] + h.sin() * -p[1] - 17.0).abs() < 1e-9);
    }
}

#[test]
fn zero_noise_large_crater_close_is_always_found() {
    let cfg = SweepConfig {
        lidar: LidarConfig {
            range_noise_sigma_m: 0.0,
            ..LidarConfig::default()
        },
        stereo: StereoConfig {
            disparity_noise_sigma_px: 0.0,
            dropout_probability: 0.0,
            ..StereoConfig::default()
        },
        roughness_m: 0.0,
        ..SweepConfig::default()
    };
    let grid = tiny_grid(vec![15.0], vec![8.0], 4);
    for det in [Method::Lidar, Method::Stereo] {
        let r = run_sweep(det, &grid, &cfg, 11).unwrap();
        assert_eq!(r.cells[0].pd, 1.0, "{det:?}");
    }
}

fn fake_report(seeds: usize, hits: usize) -> KppReport {
    let grid = tiny_grid(vec![5.0, 10.0], vec![15.0, 20.0, 25.0], seeds);
    let mut trials = Vec::new();
    for (c, (d, r)) in grid.cells().enumerate() {
        for k in 0..seeds {
            let hit = k < hits;
            trials.push(Trial {
                diameter_m: d,
                range_m: r,
                approach_deg: grid.approach_deg[k % 4],
                seed: trial_seed(0, c, k),
                detected: hit,
                err_x_m: hit.then_some(0.1 * (k as f64 + 1.0) / 3.0),
                err_y_m: hit.then_some(-0.05 * c as f64),
            });
        }
    }
    summarize(Method::Lidar, &grid, (15.0, 20.0), 0, trials)
}

#[test]
fn cells_csv_row_count_and_round_trip() {
    let r = fake_report(10, 7);
    let text = cells_csv(&r);
    assert_eq!(text.lines().count(), 1 + 2 * 3);
    let back = parse_cells_csv(&text).unwrap();
    assert_eq!(back.len(), r.cells.len());
    for (a, b) in back.iter().zip(&r.cells) {
        assert_eq!(a.diameter_m, b.diameter_m);
        assert_eq!(a.detections, b.detections);
        assert_eq!(a.pd, b.pd);
        assert_eq!(a.pd_low, b.pd_low);
        assert_eq!(a.rms_error_m, b.rms_error_m);
    }
    let bad = text.replacen("0.7", "x", 1);
    match parse_cells_csv(&bad) {
        Err(craterloc::Error::Parse { offset, .. }) => assert!(offset > 0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn empty_report_writes_header_only() {
    let grid = tiny_grid(vec![], vec![], 1);
    let r = summarize(Method::Stereo, &grid, (15.0, 20.0), 0, vec![]);
    assert_eq!(cells_csv(&r), format!("{CELLS_HEADER}\n"));
    assert_eq!(trials_csv(&r), format!("{TRIALS_HEADER}\n"));
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&r, dir.path(), ReportFormat::Csv).unwrap();
    assert_eq!(files.len(), 3);
    assert_eq!(std::fs::read_to_string(dir.path().join(CELLS_CSV)).unwrap().lines().count(), 1);
}

#[test]
fn trials_csv_schema() {
    let r = fake_report(4, 2);
    let text = trials_csv(&r);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "diameter_m,range_m,approach_deg,seed,detected,err_x_m,err_y_m");
    let miss = text.lines().find(|l| l.split(',').nth(4) == Some("0")).unwrap();
    assert!(miss.ends_with(",0,,"));
    assert_eq!(text.lines().count(), 1 + 6 * 4);
}

#[test]
fn pooled_sigma_uses_range_window_and_hits_only() {
    let r = fake_report(10, 5);
    let d5 = r.diameter(5.0).unwrap();
    assert_eq!(d5.true_positives, 10);
    assert_eq!(d5.reference_three_sigma_m, Some(0.28));
    let manual = rms_error(r.trials.iter().filter(|t| t.diameter_m == 5.0 && t.range_m <= 20.0)).1;
    assert!((d5.sigma_p_m - manual).abs() < 1e-12);
    assert!((d5.three_sigma_m - 3.0 * manual).abs() < 1e-12);
    for c in &r.cells {
        assert!((0.0..=1.0).contains(&c.pd) && c.pd_low <= c.pd && c.pd <= c.pd_high);
        assert_eq!(c.trials, 10);
    }
}

#[test]
fn interval_width_scales_with_root_n() {
    let w = |n: usize| {
        let (lo, hi) = wilson_interval(n * 3 / 4, n, 0.95);
        hi - lo
    };
    let ratio = w(10) / w(40);
    assert!((ratio - 2.0).abs() < 0.35, "{ratio}");
}

#[test]
fn sigma_table_from_report_fills_gaps() {
    let mut r = fake_report(10, 5);
    // no hits at all for D=10 at 25 m
    for t in r.trials.iter_mut().filter(|t| t.diameter_m == 10.0 && t.range_m == 25.0) {
        t.detected = false;
        t.err_x_m = None;
        t.err_y_m = None;
    }
    let r = summarize(Method::Lidar, &r.grid.clone(), (15.0, 20.0), 0, r.trials);
    let table = craterloc::localizer::SigmaTable::from_report(&r, 3).unwrap();
    assert_eq!(table.sigma_m.len(), 2);
    assert_eq!(table.sigma_m[1][2], table.sigma_m[1][1]);
    let c = r.cell(5.0, 15.0).unwrap();
    assert!((table.sigma_m[0][0] - c.rms_error_m / 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn report_json_and_csv_are_reproducible() {
    let grid = tiny_grid(vec![10.0], vec![10.0], 2);
    let cfg = SweepConfig {
        cell_size_m: 0.1,
        ..SweepConfig::default()
    };
    let a = run_sweep(Method::Lidar, &grid, &cfg, 5).unwrap();
    let b = run_sweep(Method::Lidar, &grid, &cfg, 5).unwrap();
    let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    emit_report(&a, da.path(), ReportFormat::All).unwrap();
    emit_report(&b, db.path(), ReportFormat::All).unwrap();
    for f in [TRIALS_CSV, CELLS_CSV, LONG_CSV, REPORT_JSON] {
        assert_eq!(std::fs::read(da.path().join(f)).unwrap(), std::fs::read(db.path().join(f)).unwrap(), "{f}");
    }
    let long = std::fs::read_to_string(da.path().join(LONG_CSV)).unwrap();
    assert_eq!(long.lines().count(), 1 + 2);
}
