//! End-to-end acceptance checks. Each test writes one PASS/FAIL line to the
//! real stdout, so the verdicts show up even when output capture is on.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;

use craterloc::cloud::*;
use craterloc::config::PipelineConfig;
use craterloc::eval::*;
use craterloc::landmarks::{db_from_scene, LandmarkDb, LandmarkRecord};
use craterloc::lidar::*;
use craterloc::localizer::*;
use craterloc::sensor::{simulate_lidar, DisparityMap, LidarConfig, StereoConfig};
use craterloc::stereo::fit_disparity_plane;
use craterloc::terrain::*;
use craterloc::{Method, Pose2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Master seed for every trial table; kept apart from the seeds used to tune
/// the detector defaults.
const MASTER: u64 = 0xACCE_0001;
const SEEDS: usize = 40;

fn verdict(n: u32, ok: bool, text: &str) {
    let line = format!("\nacceptance {n}: {} {text}\n", if ok { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

fn grid(diameters: &[f64], ranges: &[f64]) -> SweepGrid {
    SweepGrid {
        diameters_m: diameters.to_vec(),
        ranges_m: ranges.to_vec(),
        approach_deg: vec![0.0, 90.0, 180.0, 270.0],
        seeds_per_cell: SEEDS,
    }
}

fn sweep(detector: Method, g: &SweepGrid, window: (f64, f64)) -> KppReport {
    let cfg = SweepConfig::default();
    let trials = run_trials(detector, g, &cfg, MASTER).unwrap();
    summarize(detector, g, window, MASTER, trials)
}

/// Both detectors on the same scenes: four diameters at 15 m.
fn at_fifteen(detector: Method) -> &'static KppReport {
    static LIDAR: OnceLock<KppReport> = OnceLock::new();
    static STEREO: OnceLock<KppReport> = OnceLock::new();
    let cell = match detector {
        Method::Lidar => &LIDAR,
        Method::Stereo => &STEREO,
    };
    cell.get_or_init(|| sweep(detector, &grid(&[5.0, 10.0, 15.0, 20.0], &[15.0]), (15.0, 15.0)))
}

fn pd(report: &KppReport, d: f64, r: f64) -> (f64, usize) {
    let c = report.cell(d, r).unwrap();
    (c.pd, c.trials)
}

#[test]
fn lidar_detection_probability() {
    let (p, n) = pd(at_fifteen(Method::Lidar), 5.0, 15.0);
    verdict(1, p >= 0.5, &format!("LIDAR Pd for 5 m craters at 15 m = {p:.3} over {n} trials (need >= 0.5)"));
    assert!(p >= 0.5);
}

#[test]
fn lidar_position_error() {
    let g = grid(&[5.0], &[15.0, 16.0, 17.0, 18.0, 19.0, 20.0]);
    let report = sweep(Method::Lidar, &g, (15.0, 20.0));
    let d = report.diameter(5.0).unwrap();
    let ok = d.true_positives > 0 && d.three_sigma_m <= 2.0;
    verdict(
        2,
        ok,
        &format!(
            "LIDAR 3-sigma for 5 m craters at 15-20 m = {:.2} m from {} hits (need <= 2 m; reference {:.2} m)",
            d.three_sigma_m,
            d.true_positives,
            d.reference_three_sigma_m.unwrap_or(f64::NAN)
        ),
    );
    assert!(ok);
}

#[test]
fn stereo_kpps() {
    let near = sweep(Method::Stereo, &grid(&[5.0], &[5.0, 8.0, 10.0, 12.0, 15.0]), (5.0, 15.0));
    let far = at_fifteen(Method::Stereo);
    let (p12, n12) = pd(&near, 5.0, 12.0);
    let mut ok = p12 >= 0.5;
    let mut text = format!("stereo Pd 5 m @ 12 m = {p12:.3} ({n12} trials)");
    for d in [10.0, 15.0, 20.0] {
        let (p, _) = pd(far, d, 15.0);
        ok &= p >= 0.5;
        text += &format!(", {d} m @ 15 m = {p:.3}");
    }
    let s = near.diameter(5.0).unwrap();
    ok &= s.true_positives > 0 && s.three_sigma_m <= 1.5;
    text += &format!(
        "; 3-sigma 5 m up to 15 m = {:.2} m from {} hits (need Pd >= 0.5, 3-sigma <= 1.5 m)",
        s.three_sigma_m, s.true_positives
    );
    let refs: Vec<String> = far
        .diameters
        .iter()
        .map(|d| format!("{} m {:.2} (ref {:.2})", d.diameter_m, d.three_sigma_m, d.reference_three_sigma_m.unwrap_or(f64::NAN)))
        .collect();
    text += &format!("; at 15 m: {}", refs.join(", "));
    verdict(3, ok, &text);
    assert!(ok);
}

#[test]
fn stereo_error_exceeds_lidar() {
    let (l, s) = (at_fifteen(Method::Lidar), at_fifteen(Method::Stereo));
    let mut ok = true;
    let mut parts = Vec::new();
    for (a, b) in l.diameters.iter().zip(&s.diameters) {
        // a diameter with no hits for either detector has nothing to compare
        let pass = b.true_positives == 0 || a.true_positives == 0 || b.three_sigma_m >= a.three_sigma_m;
        ok &= pass;
        parts.push(format!("{} m: stereo {:.2} vs LIDAR {:.2}", a.diameter_m, b.three_sigma_m, a.three_sigma_m));
    }
    verdict(4, ok, &format!("3-sigma at 15 m, {SEEDS} seeds per cell: {}", parts.join("; ")));
    assert!(ok);
}

#[test]
fn traverse_localization() {
    let cfg = PipelineConfig::default();
    let tcfg = cfg.traverse_config(Method::Lidar);
    let route = vec![[0.0, 0.0], [500.0, 0.0]];
    let t = &cfg.traverse;
    let runs = 20u64;
    let logs: Vec<(usize, TraverseLog)> = (0..runs)
        .map(|k| {
            let seed = 1000 + k;
            let mut world = TraverseWorld::along_route(&route, t.craters_per_100m, t.diameter_range_m, seed).unwrap();
            world.cell_size_m = t.cell_size_m;
            world.roughness_m = cfg.scene.roughness_m;
            let db = world.landmark_db(cfg.scene.map_sigma_m, seed ^ 0xDB);
            (db.len(), run_traverse(&world, &route, &tcfg, &db, seed).unwrap())
        })
        .collect();

    let min_landmarks = logs.iter().map(|(n, _)| *n).min().unwrap();
    let updates: usize = logs.iter().map(|(_, l)| l.updates().count()).sum();
    let worst_update = logs.iter().flat_map(|(_, l)| l.updates().map(|s| s.three_sigma())).fold(0.0, f64::max);
    let worst_any = logs.iter().flat_map(|(_, l)| l.steps.iter().map(|s| s.three_sigma())).fold(0.0, f64::max);

    // mean NEES across runs at each sensing checkpoint; for a consistent
    // filter that is chi-square with 2 * runs dof, scaled by 1 / runs
    let every = tcfg.sense_every_m.round() as usize;
    let n_steps = logs[0].1.steps.len();
    let chi = ChiSquared::new(2.0 * runs as f64).unwrap();
    let band = (chi.inverse_cdf(0.025) / runs as f64, chi.inverse_cdf(0.975) / runs as f64);
    let mut per_step = Vec::new();
    for i in (every..n_steps).step_by(every) {
        let v: Vec<f64> = logs.iter().filter_map(|(_, l)| l.steps.get(i).and_then(|s| s.nees())).collect();
        if v.len() == runs as usize {
            per_step.push(v.iter().sum::<f64>() / v.len() as f64);
        }
    }
    let avg = per_step.iter().sum::<f64>() / per_step.len() as f64;
    let inside = per_step.iter().filter(|v| (band.0..=band.1).contains(*v)).count() as f64 / per_step.len() as f64;

    let ok = min_landmarks >= 15 && updates > 0 && worst_update <= 5.0 && (band.0..=band.1).contains(&avg);
    verdict(
        5,
        ok,
        &format!(
            "{runs} traverses of 500 m at {:.0}% drift, >= {min_landmarks} landmarks each: max 3-sigma {worst_update:.2} m over {updates} updates \
             (all steps {worst_any:.2} m; need <= 5 m), mean NEES {avg:.2} in [{:.2}, {:.2}], {:.0}% of checkpoints in band",
            100.0 * tcfg.drift_fraction,
            band.0,
            band.1,
            100.0 * inside
        ),
    );
    assert!(ok);
}

fn plane_fit_exact() -> bool {
    let cam = StereoConfig::default();
    let (w, h) = (cam.width_px, cam.height_px);
    let data: Vec<f32> = (0..w * h).map(|i| (0.001 * (i % w) as f64 + 0.05 * (i / w) as f64 + 2.0) as f32).collect();
    let map = DisparityMap::new(w, h, data.clone(), cam).unwrap();
    let p = fit_disparity_plane(&map, 3).unwrap();
    // the raster is f32, so compare with what it stores
    let disp_ok = data.iter().enumerate().all(|(i, d)| (p.predict((i % w) as f64, (i / w) as f64) - *d as f64).abs() <= 1e-5);

    let pts: Vec<Vec3> = (0..2500).map(|i| {
        let (x, y) = ((i % 50) as f64 * 0.4 - 10.0, (i / 50) as f64 * 0.4 - 10.0);
        Vec3::new(x, y, 0.3 * x - 0.2 * y + 1.0)
    }).collect();
    let cloud = PointCloud::new(pts, Frame::Sensor, Vec3::new(0.0, 0.0, 30.0));
    let (_, al) = fit_ground_plane_and_align(&cloud, &AlignConfig::default()).unwrap();
    disp_ok && (al.plane.normal - Vec3::new(-0.3, 0.2, 1.0).normalize()).norm() <= 1e-9
}

fn voxel_membership_exhaustive() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pts: Vec<Vec3> = (0..2000).map(|_| Vec3::new(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0), rng.random_range(-1.0..1.0))).collect();
    let size = 0.3;
    let index = VoxelIndex::from_points(&pts, size);
    let expect: std::collections::BTreeSet<[i32; 3]> =
        pts.iter().map(|p| [(p.x / size).floor() as i32, (p.y / size).floor() as i32, (p.z / size).floor() as i32]).collect();
    let got: std::collections::BTreeSet<[i32; 3]> = index.occupied_cells().collect();
    let top = (index.bounds().unwrap().max[2] + 3) as f64 * size;
    got == expect
        && got.iter().all(|&c| {
            let t = index.center(c);
            raycast_first_transition(&index, &Vec3::new(t.x, t.y, top), &-Vec3::z()).is_some_and(|hit| index.contains(index.cell_of(&hit)) && hit.z >= t.z - 1e-9)
        })
}

fn query_matches_brute_force() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let records: Vec<LandmarkRecord> = (0..10_000)
        .map(|i| {
            let d = rng.random_range(1.0..40.0);
            LandmarkRecord { id: i, x_m: rng.random_range(-3000.0..3000.0), y_m: rng.random_range(-3000.0..3000.0), diameter_m: d, depth_m: 0.2 * d }
        })
        .collect();
    let db = LandmarkDb::new(records.clone()).unwrap();
    (0..100).all(|_| {
        let c = [rng.random_range(-3000.0..3000.0), rng.random_range(-3000.0..3000.0)];
        let r = rng.random_range(0.0..400.0);
        let dr = (rng.random_range(0.0..20.0), rng.random_range(20.0..45.0));
        let mut brute: Vec<&LandmarkRecord> = records
            .iter()
            .filter(|l| (l.x_m - c[0]).hypot(l.y_m - c[1]) <= r && l.diameter_m >= dr.0 && l.diameter_m <= dr.1)
            .collect();
        brute.sort_by_key(|l| l.id);
        db.query_radius(c, r, dr) == brute
    })
}

fn propagate_matches_monte_carlo() -> bool {
    let runs = 2000u64;
    let mut s2 = 0.0;
    let mut cov = 0.0;
    for k in 0..runs {
        let mut s = RoverState::new([0.0, 0.0], 0.0, 0.0);
        for j in 0..50 {
            s = propagate(&s, &OdometrySegment::new(2.0, 0.0, 0.02), k * 100 + j);
        }
        s2 += (s.position[0] - 100.0).powi(2) + s.position[1].powi(2);
        cov = s.covariance[0][0] + s.covariance[1][1];
    }
    // random walk: per-axis sd is drift times distance
    let oracle = 2.0 * (0.02f64 * 100.0).powi(2);
    let mc = s2 / runs as f64;
    (mc / oracle - 1.0).abs() <= 0.15 && (cov / oracle - 1.0).abs() <= 1e-9
}

fn placement_argmax_at_truth() -> bool {
    let cfg = LidarDetectorConfig::default();
    let lidar = LidarConfig { range_noise_sigma_m: 0.0, ..LidarConfig::default() };
    [5.0, 10.0, 15.0, 20.0].iter().all(|&d| {
        let range = 8.0;
        let dist = range + 0.5 * d;
        let scene = synthesize_scene(
            &SceneParams::new(vec![CraterSpec::new(1, [0.0, 0.0], d)], 2.0 * (dist + 8.0), 0.05, 0.0, 9).with_rover_pose(Pose2::new(-dist, 0.0, 0.0)),
        )
        .unwrap();
        let cloud = simulate_lidar(&scene, &lidar, 9).unwrap().crop_horizontal_range(cfg.min_range_m, cfg.max_range_m);
        let (aligned, al) = fit_ground_plane_and_align(&cloud, &cfg.align()).unwrap();
        let index = voxelize(&aligned, cfg.voxel_size_m);
        let c = &scene.craters[0];
        let truth = [dist, 0.0];
        let view = ModelView { sensor: aligned.sensor_origin, center_xy: truth, rim_z: al.plane.offset + c.rim_height, ground_z: al.plane.offset };
        let lm = db_from_scene(&scene, 0.0, 0).records()[0].clone();
        let model = build_parametric_model(&lm, &view, &cfg);
        let k = (cfg.grid_extent_m / cfg.grid_pitch_m).round() as i32;
        let mut best = (f64::NEG_INFINITY, [0.0; 2]);
        for i in -k..=k {
            for j in -k..=k {
                let xy = [truth[0] + i as f64 * cfg.grid_pitch_m, truth[1] + j as f64 * cfg.grid_pitch_m];
                let s = score_placement(&index, &model, xy);
                if s > best.0 {
                    best = (s, xy);
                }
            }
        }
        (best.1[0] - truth[0]).hypot(best.1[1] - truth[1]) <= cfg.grid_pitch_m + 1e-9
    })
}

#[test]
fn oracle_suites() {
    let checks = [
        ("plane fit", plane_fit_exact()),
        ("voxel/raycast", voxel_membership_exhaustive()),
        ("query_radius", query_matches_brute_force()),
        ("propagate", propagate_matches_monte_carlo()),
        ("score_placement", placement_argmax_at_truth()),
    ];
    let ok = checks.iter().all(|(_, v)| *v);
    let text: Vec<String> = checks.iter().map(|(n, v)| format!("{n} {}", if *v { "ok" } else { "failed" })).collect();
    verdict(6, ok, &text.join(", "));
    assert!(ok);
}

fn run_cli(args: &[&str], out: &Path) {
    let o = Command::new(env!("CARGO_BIN_EXE_craterloc")).args(args).arg("--out").arg(out).output().unwrap();
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let name = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
        if p.is_dir() {
            out.extend(tree(&p).into_iter().map(|(n, b)| (format!("{name}/{n}"), b)));
        } else {
            out.push((name, std::fs::read(&p).unwrap()));
        }
    }
    out.sort();
    out
}

#[test]
fn cli_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let mut trees = Vec::new();
    for run in ["a", "b"] {
        let root = tmp.path().join(run);
        let scene = root.join("scene");
        run_cli(&["scene", "--diameter", "10", "--range", "9", "--approach", "30", "--seed", "5"], &scene);
        run_cli(&["scene", "--preset", "kpp", "--seed", "5"], &root.join("manifest"));
        let ply = scene.join("lidar.ply");
        let db = scene.join("landmarks.jsonl");
        run_cli(&["detect", "--input", ply.to_str().unwrap(), "--db", db.to_str().unwrap()], &root.join("lidar"));
        run_cli(&["detect", "--method", "stereo", "--input", scene.join("disparity.f32").to_str().unwrap()], &root.join("stereo"));
        run_cli(&["traverse", "--length", "120", "--seed", "3", "--runs", "2"], &root.join("traverse"));
        run_cli(&["eval", "--detector", "stereo", "--seeds", "1", "--seed", "8"], &root.join("eval"));
        trees.push(tree(&root));
    }
    let files = trees[0].len();
    let ok = files > 10 && trees[0] == trees[1];
    verdict(7, ok, &format!("scene, manifest, detect (both), traverse and eval rerun byte-identical over {files} files"));
    assert!(ok);
}
