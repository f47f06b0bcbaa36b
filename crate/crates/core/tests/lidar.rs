use craterloc::cloud::*;
use craterloc::landmarks::{db_from_scene, LandmarkDb, LandmarkRecord};
use craterloc::lidar::*;
use craterloc::localizer::RoverState;
use craterloc::sensor::{simulate_lidar, LidarConfig};
use craterloc::terrain::*;
use craterloc::{Method, Pose2};

struct Stages {
    aligned: PointCloud,
    ground_z: f64,
    normals: NormalField,
    index: VoxelIndex,
    clusters: Vec<BackwallCluster>,
}

fn run_stages(scene: &SceneTruth, lidar: &LidarConfig, seed: u64) -> Stages {
    let cfg = LidarDetectorConfig::default();
    let cloud = simulate_lidar(scene, lidar, seed).unwrap().crop_horizontal_range(cfg.min_range_m, cfg.max_range_m);
    let (aligned, al) = fit_ground_plane_and_align(&cloud, &cfg.align()).unwrap();
    let normals = estimate_normals_with(&aligned, &cfg.normals());
    let index = voxelize(&aligned, cfg.voxel_size_m);
    let clusters = find_backwall_clusters(&aligned, &normals, &cfg);
    Stages {
        aligned,
        ground_z: al.plane.offset,
        normals,
        index,
        clusters,
    }
}

/// Crater of diameter `d` at the origin, rover `range` short of the near rim
/// looking along +x.
fn approach(d: f64, range: f64, roughness: f64, seed: u64) -> SceneTruth {
    let dist = range + 0.5 * d;
    synthesize_scene(
        &SceneParams::new(vec![CraterSpec::new(1, [0.0, 0.0], d)], 2.0 * (dist + 8.0), 0.05, roughness, seed)
            .with_rover_pose(Pose2::new(-dist, 0.0, 0.0)),
    )
    .unwrap()
}

fn quiet() -> LidarConfig {
    LidarConfig {
        range_noise_sigma_m: 0.0,
        ..LidarConfig::default()
    }
}

#[test]
fn flat_ground_has_no_backwall() {
    let scene = synthesize_scene(&SceneParams::new(vec![], 60.0, 0.05, 0.03, 3).with_rover_pose(Pose2::new(0.0, 0.0, 0.0))).unwrap();
    let s = run_stages(&scene, &LidarConfig::default(), 3);
    assert!(s.clusters.is_empty(), "{} clusters", s.clusters.len());
}

#[test]
fn single_crater_gives_one_far_wall_cluster() {
    let scene = approach(10.0, 10.0, 0.03, 5);
    let s = run_stages(&scene, &LidarConfig::default(), 5);
    assert_eq!(s.clusters.len(), 1);
    // crater centre sits 15 m ahead in the rover frame
    let c = s.clusters[0].centroid;
    assert!(c.x > 15.0 && c.x < 20.5 && c.y.abs() < 5.0, "{c:?}");
}

#[test]
fn two_craters_two_clusters() {
    let craters = vec![CraterSpec::new(1, [0.0, 6.0], 8.0), CraterSpec::new(2, [2.0, -8.0], 10.0)];
    let scene = synthesize_scene(&SceneParams::new(craters, 60.0, 0.05, 0.03, 8).with_rover_pose(Pose2::new(-14.0, 0.0, 0.0))).unwrap();
    let s = run_stages(&scene, &LidarConfig::default(), 8);
    assert_eq!(s.clusters.len(), 2);
    let mut ys: Vec<f64> = s.clusters.iter().map(|c| c.centroid.y).collect();
    ys.sort_by(f64::total_cmp);
    assert!(ys[0] < -4.0 && ys[1] > 3.0, "{ys:?}");
}

#[test]
fn rim_geometry_brackets_the_crater() {
    for d in [5.0, 10.0, 15.0] {
        let scene = approach(d, 8.0, 0.0, 2);
        let s = run_stages(&scene, &quiet(), 2);
        let cfg = LidarDetectorConfig::default();
        let hyp = estimate_rim_geometry(&s.index, &s.aligned, &s.clusters[0], &s.normals, s.ground_z, &cfg).unwrap();
        let centre = 8.0 + 0.5 * d;
        assert!((hyp.front_rim.x - 8.0).abs() < 0.5, "front {:?}", hyp.front_rim);
        assert!((hyp.back_rim.x - (8.0 + d)).abs() < 0.1 * d + 0.5, "back {:?}", hyp.back_rim);
        assert!((hyp.center_xy[0] - centre).abs() < 0.1 * d + 0.5 && hyp.center_xy[1].abs() < 0.5);
        assert!((hyp.diameter_est / d - 1.0).abs() < cfg.diam_tol, "{}", hyp.diameter_est);
    }
}

fn record(d: f64, depth: f64) -> LandmarkRecord {
    LandmarkRecord {
        id: 9,
        x_m: 0.0,
        y_m: 0.0,
        diameter_m: d,
        depth_m: depth,
    }
}

#[test]
fn model_zones_follow_the_geometry() {
    let cfg = LidarDetectorConfig::default();
    let view = ModelView {
        sensor: Vec3::new(0.0, 0.0, 0.0),
        center_xy: [14.0, 3.0],
        rim_z: -1.3,
        ground_z: -1.5,
    };
    let lm = record(10.0, 2.0);
    let m = build_parametric_model(&lm, &view, &cfg);
    assert_eq!(m.landmark_id, 9);
    let toward = [-14.0, -3.0];
    let mut floor = f64::INFINITY;
    let mut occluded_along = 0.0;
    for s in &m.samples {
        let r = s.offset[0].hypot(s.offset[1]);
        assert!(r <= 5.0 + cfg.rim_band_m + 1e-9);
        assert_eq!(s.zone == Zone::Rim, (r - 5.0).abs() <= cfg.rim_band_m);
        assert!(s.z <= view.rim_z + 1e-12);
        let along = (s.offset[0] * toward[0] + s.offset[1] * toward[1]) / toward[0].hypot(toward[1]);
        if s.zone == Zone::PreRimOcclusion {
            occluded_along += along;
            // the upper far wall faces the sensor
            assert!(!(along < -0.8 * r && r > 0.8 * 5.0), "{:?}", s.offset);
        }
        floor = floor.min(s.z);
    }
    assert!((floor - (view.ground_z - lm.depth_m)).abs() < 1e-9);
    assert!(m.zone_count(Zone::PreRimOcclusion) > 0);
    assert!(occluded_along > 0.0);
    assert_eq!(m.zone_count(Zone::Rim) + m.zone_count(Zone::Interior) + m.zone_count(Zone::PreRimOcclusion), m.samples.len());
}

#[test]
fn placement_score_peaks_at_the_true_centre() {
    let cfg = LidarDetectorConfig::default();
    for d in [5.0, 10.0, 15.0, 20.0] {
        let range = 8.0;
        let scene = approach(d, range, 0.0, 4);
        let s = run_stages(&scene, &quiet(), 4);
        let c = &scene.craters[0];
        let truth = [range + 0.5 * d, 0.0];
        let view = ModelView {
            sensor: s.aligned.sensor_origin,
            center_xy: truth,
            rim_z: s.ground_z + c.rim_height,
            ground_z: s.ground_z,
        };
        let model = build_parametric_model(&record(d, c.depth), &view, &cfg);
        let mut best = (f64::NEG_INFINITY, [0.0; 2]);
        let k = (cfg.grid_extent_m / cfg.grid_pitch_m).round() as i32;
        for i in -k..=k {
            for j in -k..=k {
                let xy = [truth[0] + i as f64 * cfg.grid_pitch_m, truth[1] + j as f64 * cfg.grid_pitch_m];
                let score = score_placement(&s.index, &model, xy);
                if score > best.0 {
                    best = (score, xy);
                }
            }
        }
        let err = (best.1[0] - truth[0]).hypot(best.1[1] - truth[1]);
        assert!(err <= cfg.grid_pitch_m + 1e-9, "D {d}: argmax {:?}", best.1);
    }
}

#[test]
fn empty_database_gives_no_detections() {
    let scene = approach(10.0, 10.0, 0.03, 1);
    let cloud = simulate_lidar(&scene, &LidarConfig::default(), 1).unwrap();
    let prior = RoverState::new(scene.rover_pose.position(), 0.0, 1.0);
    let cfg = LidarDetectorConfig::default();
    assert!(detect_lidar(&cloud, &prior, &LandmarkDb::empty(), &cfg).unwrap().is_empty());
    let far = LandmarkDb::new(vec![LandmarkRecord { x_m: 500.0, ..record(10.0, 2.0) }]).unwrap();
    assert!(detect_lidar(&cloud, &prior, &far, &cfg).unwrap().is_empty());
}

#[test]
fn end_to_end_identifies_each_crater() {
    let craters = vec![CraterSpec::new(11, [20.0, 7.0], 8.0), CraterSpec::new(12, [18.0, -8.0], 12.0)];
    let scene = synthesize_scene(&SceneParams::new(craters.clone(), 70.0, 0.05, 0.03, 21).with_rover_pose(Pose2::new(0.0, 0.0, 0.1))).unwrap();
    let cloud = simulate_lidar(&scene, &LidarConfig::default(), 21).unwrap();
    let db = db_from_scene(&scene, 0.0, 21);
    let prior = RoverState::new(scene.rover_pose.position(), scene.rover_pose.heading, 1.0);
    let dets = detect_lidar(&cloud, &prior, &db, &LidarDetectorConfig::default()).unwrap();
    assert_eq!(dets.len(), 2);
    for c in &craters {
        let d = dets.iter().find(|d| d.landmark_id == Some(c.id)).expect("detected");
        assert_eq!(d.method, Method::Lidar);
        assert_eq!(d.diameter, c.diameter);
        let err = (d.center_xy[0] - c.center_xy[0]).hypot(d.center_xy[1] - c.center_xy[1]);
        assert!(err < (0.25 * c.diameter).max(1.0), "{} off by {err}", c.id);
    }
}

#[test]
fn site_translation_carries_through() {
    let scene = approach(10.0, 10.0, 0.03, 6);
    let cloud = simulate_lidar(&scene, &LidarConfig::default(), 6).unwrap();
    let cfg = LidarDetectorConfig::default();
    let (dx, dy) = (1234.5, -678.25);
    let db = db_from_scene(&scene, 0.0, 6);
    let moved = LandmarkDb::new(
        db.records()
            .iter()
            .map(|r| LandmarkRecord {
                x_m: r.x_m + dx,
                y_m: r.y_m + dy,
                ..r.clone()
            })
            .collect(),
    )
    .unwrap();
    let p = scene.rover_pose.position();
    let a = detect_lidar(&cloud, &RoverState::new(p, 0.0, 1.0), &db, &cfg).unwrap();
    let b = detect_lidar(&cloud, &RoverState::new([p[0] + dx, p[1] + dy], 0.0, 1.0), &moved, &cfg).unwrap();
    assert_eq!(a.len(), 1);
    assert_eq!(a.len(), b.len());
    assert!((b[0].center_xy[0] - a[0].center_xy[0] - dx).abs() < 1e-6);
    assert!((b[0].center_xy[1] - a[0].center_xy[1] - dy).abs() < 1e-6);
}

#[test]
fn range_bias_interpolates_and_clamps() {
    let cfg = LidarDetectorConfig {
        range_bias_m: vec![[5.0, 0.1], [10.0, 0.3], [20.0, -0.1]],
        ..LidarDetectorConfig::default()
    };
    assert_eq!(cfg.range_bias_at(0.0), 0.1);
    assert_eq!(cfg.range_bias_at(5.0), 0.1);
    assert!((cfg.range_bias_at(7.5) - 0.2).abs() < 1e-12);
    assert!((cfg.range_bias_at(15.0) - 0.1).abs() < 1e-12);
    assert_eq!(cfg.range_bias_at(40.0), -0.1);
    assert!(cfg.validate().is_ok());
    let empty = LidarDetectorConfig {
        range_bias_m: vec![],
        ..LidarDetectorConfig::default()
    };
    assert_eq!(empty.range_bias_at(12.0), 0.0);
    let bad = LidarDetectorConfig {
        range_bias_m: vec![[10.0, 0.1], [10.0, 0.2]],
        ..LidarDetectorConfig::default()
    };
    assert!(bad.validate().is_err());
}
