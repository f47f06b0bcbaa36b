use std::collections::BTreeSet;

use craterloc::cloud::*;
use proptest::prelude::*;

fn grid(n: usize, step: f64, f: impl Fn(f64, f64) -> f64) -> Vec<Vec3> {
    let mut pts = Vec::with_capacity(n * n);
    let half = 0.5 * (n - 1) as f64 * step;
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (i as f64 * step - half, j as f64 * step - half);
            pts.push(Vec3::new(x, y, f(x, y)));
        }
    }
    pts
}

fn angle_deg(a: &Vec3, b: &Vec3) -> f64 {
    (a.dot(b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos().to_degrees()
}

#[test]
fn constructed_planes_are_recovered_exactly() {
    for (a, b, c) in [(0.1, 0.0, 0.0), (0.0, -0.25, 3.0), (0.3, 0.2, -1.5)] {
        let cloud = PointCloud::new(grid(50, 0.4, |x, y| a * x + b * y + c), Frame::Sensor, Vec3::new(0.0, 0.0, 20.0));
        let (aligned, al) = fit_ground_plane_and_align(&cloud, &AlignConfig::default()).unwrap();
        let truth = Vec3::new(-a, -b, 1.0).normalize();
        assert!((al.plane.normal - truth).norm() <= 1e-9, "{:?}", al.plane.normal);
        let z0 = aligned.points[0].z;
        assert!(aligned.points.iter().all(|p| (p.z - z0).abs() <= 1e-9));
        assert!((al.rotation.matrix().determinant() - 1.0).abs() < 1e-12);
        assert!((al.rotation * cloud.sensor_origin - aligned.sensor_origin).norm() < 1e-12);
    }
}

fn slope_with_crater() -> (PointCloud, Vec3) {
    let t = 10f64.to_radians().tan();
    // bowl of radius 4.4 m on a 20 m square covers about 15% of the points
    let pts = grid(100, 0.2, |x, y| {
        let r = (x - 3.0).hypot(y + 2.0);
        let bowl = if r < 4.4 { -1.6 * (1.0 - (r / 4.4).powi(2)) } else { 0.0 };
        t * x + bowl
    });
    let inside = pts.iter().filter(|p| (p.x - 3.0).hypot(p.y + 2.0) < 4.4).count() as f64 / pts.len() as f64;
    assert!((0.13..0.17).contains(&inside), "{inside}");
    (PointCloud::new(pts, Frame::Sensor, Vec3::new(-8.0, 0.0, 1.5)), Vec3::new(-t, 0.0, 1.0).normalize())
}

#[test]
fn slope_removed_despite_crater() {
    let (cloud, truth) = slope_with_crater();
    let (_, al) = fit_ground_plane_and_align(&cloud, &AlignConfig::default()).unwrap();
    assert!(angle_deg(&al.plane.normal, &truth) < 0.5, "{}", angle_deg(&al.plane.normal, &truth));
}

#[test]
fn alignment_is_idempotent() {
    let (cloud, _) = slope_with_crater();
    let (once, _) = fit_ground_plane_and_align(&cloud, &AlignConfig::default()).unwrap();
    let (_, again) = fit_ground_plane_and_align(&once, &AlignConfig::default()).unwrap();
    assert!(again.rotation.angle().to_degrees() < 0.1);
}

#[test]
fn hemisphere_normals_point_to_the_axis() {
    let r = 5.0;
    let center = Vec3::new(0.0, 0.0, r);
    let mut pts = Vec::new();
    let step = 0.1 / r;
    let mut polar: f64 = 0.0;
    while polar < std::f64::consts::FRAC_PI_2 {
        let ring = (2.0 * std::f64::consts::PI * polar.sin() / step).ceil().max(1.0) as usize;
        for k in 0..ring {
            let az = k as f64 * 2.0 * std::f64::consts::PI / ring as f64;
            pts.push(center + Vec3::new(r * polar.sin() * az.cos(), r * polar.sin() * az.sin(), -r * polar.cos()));
        }
        polar += step;
    }
    let cloud = PointCloud::new(pts, Frame::Sensor, center);
    let normals = estimate_normals(&cloud, 0.3);
    let mut checked = 0;
    for ((p, n), ok) in cloud.points.iter().zip(&normals.normals).zip(&normals.valid) {
        if !ok {
            continue;
        }
        // skip the open edge where the patch is one-sided
        if (center.z - p.z) < 0.5 {
            continue;
        }
        let analytic = (center - p).normalize();
        assert!(angle_deg(n, &analytic) < 5.0, "{p:?}");
        checked += 1;
    }
    assert!(checked > cloud.len() / 2);
}

#[test]
fn raycast_through_every_occupied_center_hits_occupied() {
    let pts: Vec<Vec3> = grid(12, 0.37, |x, y| (0.8 * x).sin() + 0.3 * y);
    let index = VoxelIndex::from_points(&pts, 0.25);
    let b = index.bounds().unwrap();
    let top = (b.max[2] + 4) as f64 * 0.25;
    for c in index.occupied_cells() {
        let target = index.center(c);
        let start = Vec3::new(target.x, target.y, top);
        let hit = raycast_first_transition(&index, &start, &-Vec3::z()).expect("downward ray");
        assert!(index.contains(index.cell_of(&hit)));
        assert!(hit.z >= target.z - 1e-9);
        let from = target + Vec3::new(-3.0, 2.0, 5.0);
        let dir = (target - from).normalize();
        let hit = raycast_first_transition(&index, &from, &dir).expect("oblique ray");
        assert!(index.contains(index.cell_of(&hit)));
        assert!((hit - from).dot(&dir) <= (target - from).norm() + 0.25 * 3f64.sqrt());
    }
}

fn point() -> impl Strategy<Value = Vec3> {
    (-5.0f64..5.0, -5.0f64..5.0, -2.0f64..2.0).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

proptest! {
    #[test]
    fn voxel_membership_is_exact(pts in proptest::collection::vec(point(), 1..300), size in 0.05f64..1.5) {
        let index = VoxelIndex::from_points(&pts, size);
        let expect: BTreeSet<[i32; 3]> = pts
            .iter()
            .map(|p| [(p.x / size).floor() as i32, (p.y / size).floor() as i32, (p.z / size).floor() as i32])
            .collect();
        let got: BTreeSet<[i32; 3]> = index.occupied_cells().collect();
        prop_assert_eq!(&got, &expect);
        for p in &pts {
            prop_assert!(index.contains(index.cell_of(p)));
        }
    }

    #[test]
    fn valid_normals_face_the_sensor(
        pts in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0, -0.3f64..0.3), 50..250),
        sensor in point(),
    ) {
        let pts: Vec<Vec3> = pts.into_iter().map(|(x, y, z)| Vec3::new(x, y, z)).collect();
        let cloud = PointCloud::new(pts, Frame::Sensor, sensor);
        let normals = estimate_normals(&cloud, 0.8);
        for ((p, n), ok) in cloud.points.iter().zip(&normals.normals).zip(&normals.valid) {
            if *ok {
                prop_assert!((n.norm() - 1.0).abs() <= 1e-6);
                prop_assert!(n.dot(&(sensor - p)) >= 0.0);
            }
        }
    }
}
