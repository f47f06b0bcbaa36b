use rustc_hash::FxHashMap;

use super::{PointCloud, Vec3};

/// Inclusive integer cell box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellBox {
    pub min: [i32; 3],
    pub max: [i32; 3],
}

impl CellBox {
    pub fn contains(&self, c: [i32; 3]) -> bool {
        (0..3).all(|k| c[k] >= self.min[k] && c[k] <= self.max[k])
    }
}

/// Occupancy of a voxelised cloud, stored as sorted z-cell lists per (x, y)
/// column so that membership and column queries are both cheap.
#[derive(Debug, Clone)]
pub struct VoxelIndex {
    voxel_size: f64,
    columns: FxHashMap<(i32, i32), Vec<i32>>,
    bounds: Option<CellBox>,
    occupied: usize,
}

pub fn voxelize(cloud: &PointCloud, voxel_size: f64) -> VoxelIndex {
    VoxelIndex::from_points(&cloud.points, voxel_size)
}

impl VoxelIndex {
    pub fn from_points(points: &[Vec3], voxel_size: f64) -> Self {
        assert!(voxel_size > 0.0, "voxel_size must be positive");
        let mut columns: FxHashMap<(i32, i32), Vec<i32>> = FxHashMap::default();
        let mut bounds: Option<CellBox> = None;
        for p in points {
            let c = cell_of(p, voxel_size);
            columns.entry((c[0], c[1])).or_default().push(c[2]);
            bounds = Some(match bounds {
                None => CellBox { min: c, max: c },
                Some(b) => CellBox {
                    min: [b.min[0].min(c[0]), b.min[1].min(c[1]), b.min[2].min(c[2])],
                    max: [b.max[0].max(c[0]), b.max[1].max(c[1]), b.max[2].max(c[2])],
                },
            });
        }
        let mut occupied = 0;
        for zs in columns.values_mut() {
            zs.sort_unstable();
            zs.dedup();
            occupied += zs.len();
        }
        Self {
            voxel_size,
            columns,
            bounds,
            occupied,
        }
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn bounds(&self) -> Option<CellBox> {
        self.bounds
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied
    }

    pub fn is_empty(&self) -> bool {
        self.occupied == 0
    }

    #[inline]
    pub fn cell_of(&self, p: &Vec3) -> [i32; 3] {
        cell_of(p, self.voxel_size)
    }

    #[inline]
    pub fn center(&self, c: [i32; 3]) -> Vec3 {
        Vec3::new(
            (c[0] as f64 + 0.5) * self.voxel_size,
            (c[1] as f64 + 0.5) * self.voxel_size,
            (c[2] as f64 + 0.5) * self.voxel_size,
        )
    }

    #[inline]
    pub fn column(&self, ix: i32, iy: i32) -> &[i32] {
        self.columns.get(&(ix, iy)).map(|v| v.as_slice()).unwrap_or(&[])
    }

    #[inline]
    pub fn contains(&self, c: [i32; 3]) -> bool {
        self.column(c[0], c[1]).binary_search(&c[2]).is_ok()
    }

    pub fn occupied_cells(&self) -> impl Iterator<Item = [i32; 3]> + '_ {
        self.columns
            .iter()
            .flat_map(|(&(x, y), zs)| zs.iter().map(move |&z| [x, y, z]))
    }

    /// Distance from `p` to the nearest occupied cell centre within `reach`
    /// cells along each axis.
    pub fn nearest_within(&self, p: &Vec3, reach: i32) -> Option<f64> {
        let c = self.cell_of(p);
        let mut best = f64::INFINITY;
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                let zs = self.column(c[0] + dx, c[1] + dy);
                if zs.is_empty() {
                    continue;
                }
                let lo = zs.partition_point(|&z| z < c[2] - reach);
                for &z in &zs[lo..] {
                    if z > c[2] + reach {
                        break;
                    }
                    let d = (self.center([c[0] + dx, c[1] + dy, z]) - p).norm_squared();
                    best = best.min(d);
                }
            }
        }
        best.is_finite().then(|| best.sqrt())
    }

    /// Highest occupied z-cell in the column containing `p`.
    pub fn column_top(&self, p: &Vec3) -> Option<i32> {
        let c = self.cell_of(p);
        self.column(c[0], c[1]).last().copied()
    }
}

#[inline]
fn cell_of(p: &Vec3, s: f64) -> [i32; 3] {
    [
        (p.x / s).floor() as i32,
        (p.y / s).floor() as i32,
        (p.z / s).floor() as i32,
    ]
}

/// Walks cells from `start` along `direction` with integer (Amanatides-Woo)
/// stepping and returns the centre of the first occupied cell reached after at
/// least one unoccupied cell. Space outside the index bounds counts as
/// unoccupied; `None` once the ray leaves the bounds.
pub fn raycast_first_transition(index: &VoxelIndex, start: &Vec3, direction: &Vec3) -> Option<Vec3> {
    let b = index.bounds()?;
    let s = index.voxel_size();
    let lo = Vec3::new(b.min[0] as f64 * s, b.min[1] as f64 * s, b.min[2] as f64 * s);
    let hi = Vec3::new(
        (b.max[0] + 1) as f64 * s,
        (b.max[1] + 1) as f64 * s,
        (b.max[2] + 1) as f64 * s,
    );
    // slab clip against the bounds box
    let mut t0 = 0.0f64;
    let mut t1 = f64::INFINITY;
    for k in 0..3 {
        let d = direction[k];
        if d.abs() < 1e-15 {
            if start[k] < lo[k] || start[k] >= hi[k] {
                return None;
            }
        } else {
            let ta = (lo[k] - start[k]) / d;
            let tb = (hi[k] - start[k]) / d;
            t0 = t0.max(ta.min(tb));
            t1 = t1.min(ta.max(tb));
        }
    }
    if t0 > t1 {
        return None;
    }
    let mut seen_empty = t0 > 0.0;
    let entry = start + direction * t0;
    let mut cell = index.cell_of(&entry);
    for k in 0..3 {
        cell[k] = cell[k].clamp(b.min[k], b.max[k]);
    }
    let mut step = [0i32; 3];
    let mut t_max = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    for k in 0..3 {
        let d = direction[k];
        if d > 0.0 {
            step[k] = 1;
            t_max[k] = ((cell[k] + 1) as f64 * s - start[k]) / d;
            t_delta[k] = s / d;
        } else if d < 0.0 {
            step[k] = -1;
            t_max[k] = (cell[k] as f64 * s - start[k]) / d;
            t_delta[k] = -s / d;
        }
    }
    loop {
        if index.contains(cell) {
            if seen_empty {
                return Some(index.center(cell));
            }
        } else {
            seen_empty = true;
        }
        let k = if t_max[0] <= t_max[1] && t_max[0] <= t_max[2] {
            0
        } else if t_max[1] <= t_max[2] {
            1
        } else {
            2
        };
        if !t_max[k].is_finite() {
            return None;
        }
        cell[k] += step[k];
        t_max[k] += t_delta[k];
        if !b.contains(cell) {
            return None;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantization() {
        let idx = VoxelIndex::from_points(&[Vec3::new(0.07, 0.07, 0.0)], 0.05);
        assert!(idx.contains([1, 1, 0]));
        assert_eq!(idx.occupied_count(), 1);
        let idx = VoxelIndex::from_points(&[Vec3::new(-0.01, 0.0, 0.0)], 0.05);
        assert!(idx.contains([-1, 0, 0]));
    }

    #[test]
    fn points_in_one_cube() {
        let pts: Vec<Vec3> = (0..1000)
            .map(|i| {
                let f = i as f64 / 1000.0;
                Vec3::new(0.1 + 0.5 * f, 0.2 + 0.5 * (1.0 - f), 0.3 + 0.5 * (f * 7.0).fract())
            })
            .collect();
        assert_eq!(VoxelIndex::from_points(&pts, 1.0).occupied_count(), 1);
    }

    #[test]
    fn empty_index_never_hits() {
        let idx = VoxelIndex::from_points(&[], 0.25);
        assert!(raycast_first_transition(&idx, &Vec3::zeros(), &-Vec3::z()).is_none());
    }

    #[test]
    fn downward_ray_hits_flat_layer() {
        let mut pts = Vec::new();
        for i in -20..20 {
            for j in -20..20 {
                pts.push(Vec3::new(i as f64 * 0.1 + 0.05, j as f64 * 0.1 + 0.05, 0.01));
            }
        }
        let idx = VoxelIndex::from_points(&pts, 0.25);
        let hit = raycast_first_transition(&idx, &Vec3::new(0.3, -0.4, 5.0), &-Vec3::z()).unwrap();
        assert!(hit.z.abs() <= 0.25);
        // slanted ray
        let dir = Vec3::new(0.3, 0.2, -1.0).normalize();
        let hit = raycast_first_transition(&idx, &Vec3::new(-0.5, -0.5, 3.0), &dir).unwrap();
        assert!(hit.z.abs() <= 0.25);
    }

    #[test]
    fn skips_start_cell_and_finds_wall() {
        // start cell occupied, a gap, then a wall
        let pts = vec![Vec3::new(0.1, 0.1, 0.1), Vec3::new(0.6, 0.1, 0.1), Vec3::new(0.85, 0.1, 0.1)];
        let idx = VoxelIndex::from_points(&pts, 0.25);
        let hit = raycast_first_transition(&idx, &Vec3::new(0.1, 0.1, 0.1), &Vec3::x()).unwrap();
        assert!((hit - idx.center([2, 0, 0])).norm() < 1e-12);
    }

    #[test]
    fn ray_exits_without_transition() {
        let pts = vec![Vec3::new(0.1, 0.1, 0.1), Vec3::new(0.35, 0.1, 0.1)];
        let idx = VoxelIndex::from_points(&pts, 0.25);
        assert!(raycast_first_transition(&idx, &Vec3::new(0.1, 0.1, 0.1), &Vec3::x()).is_none());
    }

    #[test]
    fn nearest_and_column_queries() {
        let idx = VoxelIndex::from_points(&[Vec3::new(0.1, 0.1, 0.1), Vec3::new(0.1, 0.1, 1.1)], 0.25);
        let d = idx.nearest_within(&Vec3::new(0.125, 0.125, 0.125), 1).unwrap();
        assert!(d < 1e-12);
        assert!(idx.nearest_within(&Vec3::new(2.0, 2.0, 2.0), 2).is_none());
        assert_eq!(idx.column_top(&Vec3::new(0.2, 0.2, -3.0)), Some(4));
    }
}
