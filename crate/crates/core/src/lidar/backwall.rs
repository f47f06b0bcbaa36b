use crate::cloud::{NormalField, PointCloud, SpatialHash, Vec3};

use super::LidarDetectorConfig;

/// Connected set of points whose normals face the sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwallCluster {
    pub members: Vec<usize>,
    pub centroid: Vec3,
}

/// True when the normal's horizontal part points within `angle_tol` of the
/// bearing toward `target` and the normal is at least `min_tilt` off vertical.
pub(crate) fn faces(p: &Vec3, n: &Vec3, target: &Vec3, cos_tol: f64, sin_min_tilt: f64) -> bool {
    let nh = (n.x * n.x + n.y * n.y).sqrt();
    if nh < sin_min_tilt {
        return false;
    }
    let bx = target.x - p.x;
    let by = target.y - p.y;
    let bn = (bx * bx + by * by).sqrt();
    if bn < 1e-9 {
        return false;
    }
    (n.x * bx + n.y * by) / (nh * bn) >= cos_tol
}

fn find(parent: &mut [u32], mut i: u32) -> u32 {
    while parent[i as usize] != i {
        parent[i as usize] = parent[parent[i as usize] as usize];
        i = parent[i as usize];
    }
    i
}

/// Stage 1: back-wall candidate regions. `cloud` must be gravity-aligned.
pub fn find_backwall_clusters(cloud: &PointCloud, normals: &NormalField, cfg: &LidarDetectorConfig) -> Vec<BackwallCluster> {
    let cos_tol = cfg.toward_angle_deg.to_radians().cos();
    let sin_tilt = cfg.min_tilt_deg.to_radians().sin();
    let keep: Vec<usize> = (0..cloud.len())
        .filter(|&i| normals.valid[i] && faces(&cloud.points[i], &normals.normals[i], &cloud.sensor_origin, cos_tol, sin_tilt))
        .collect();
    if keep.is_empty() {
        return Vec::new();
    }
    let pts: Vec<Vec3> = keep.iter().map(|&i| cloud.points[i]).collect();
    let hash = SpatialHash::new(&pts, cfg.cluster_radius_m);
    let mut parent: Vec<u32> = (0..pts.len() as u32).collect();
    let mut nbrs = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        hash.within(&pts, p, cfg.cluster_radius_m, &mut nbrs);
        for &j in &nbrs {
            let (a, b) = (find(&mut parent, i as u32), find(&mut parent, j));
            if a != b {
                parent[a.max(b) as usize] = a.min(b);
            }
        }
    }
    let mut groups: rustc_hash::FxHashMap<u32, Vec<usize>> = rustc_hash::FxHashMap::default();
    for i in 0..pts.len() {
        let root = find(&mut parent, i as u32);
        groups.entry(root).or_default().push(i);
    }
    let mut out: Vec<BackwallCluster> = groups
        .into_values()
        .filter(|g| g.len() >= cfg.min_cluster_size)
        .map(|g| {
            let centroid = g.iter().map(|&i| pts[i]).sum::<Vec3>() / g.len() as f64;
            BackwallCluster {
                members: g.iter().map(|&i| keep[i]).collect(),
                centroid,
            }
        })
        .collect();
    out.sort_by_key(|c| c.members[0]);
    out
}
