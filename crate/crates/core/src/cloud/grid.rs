use rustc_hash::FxHashMap;

use super::Vec3;

/// Fixed-radius neighbour lookup over a uniform hash grid. Points are stored
/// grouped by cell so a query scans contiguous memory.
pub struct SpatialHash {
    cell: f64,
    cells: FxHashMap<(i32, i32, i32), (u32, u32)>,
    order: Vec<u32>,
    sorted: Vec<Vec3>,
}

impl SpatialHash {
    pub fn new(points: &[Vec3], cell: f64) -> Self {
        let mut keyed: Vec<((i32, i32, i32), u32)> =
            points.iter().enumerate().map(|(i, p)| (Self::key(p, cell), i as u32)).collect();
        keyed.sort_unstable();
        let mut cells = FxHashMap::default();
        let mut start = 0;
        while start < keyed.len() {
            let k = keyed[start].0;
            let mut end = start + 1;
            while end < keyed.len() && keyed[end].0 == k {
                end += 1;
            }
            cells.insert(k, (start as u32, (end - start) as u32));
            start = end;
        }
        let order: Vec<u32> = keyed.iter().map(|e| e.1).collect();
        let sorted = order.iter().map(|&i| points[i as usize]).collect();
        Self {
            cell,
            cells,
            order,
            sorted,
        }
    }

    #[inline]
    fn key(p: &Vec3, cell: f64) -> (i32, i32, i32) {
        (
            (p.x / cell).floor() as i32,
            (p.y / cell).floor() as i32,
            (p.z / cell).floor() as i32,
        )
    }

    /// Indices of points within `radius` of `q`, in a deterministic grid
    /// order. `points` must be the slice the hash was built from.
    pub fn within(&self, points: &[Vec3], q: &Vec3, radius: f64, out: &mut Vec<u32>) {
        debug_assert_eq!(points.len(), self.order.len());
        out.clear();
        let (kx, ky, kz) = Self::key(q, self.cell);
        let r2 = radius * radius;
        let k = ((radius / self.cell).ceil() as i32).max(1);
        for dx in -k..=k {
            for dy in -k..=k {
                for dz in -k..=k {
                    if let Some(&(start, len)) = self.cells.get(&(kx + dx, ky + dy, kz + dz)) {
                        let (s, e) = (start as usize, (start + len) as usize);
                        for (p, &i) in self.sorted[s..e].iter().zip(&self.order[s..e]) {
                            if (p - q).norm_squared() <= r2 {
                                out.push(i);
                            }
                        }
                    }
                }
            }
        }
    }
}
