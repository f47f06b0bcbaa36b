use rustc_hash::FxHashMap;

use super::{FarWallRegion, RimContour, StereoDetectorConfig};
use crate::cloud::Vec3;
use crate::detection::{CraterDetection, Method};
use crate::pose::Pose2;
use crate::sensor::DisparityMap;

/// Pairs each rim contour with the far-wall region directly above it and
/// estimates centre and diameter from the near rim and the region's top edge.
///
/// `pose` places the left camera in the site frame. Unpaired contours and
/// regions are dropped.
pub fn pair_and_estimate(
    regions: &[FarWallRegion],
    contours: &[RimContour],
    dmap: &DisparityMap,
    pose: &Pose2,
    cfg: &StereoDetectorConfig,
) -> Vec<CraterDetection> {
    let spans: Vec<FxHashMap<u32, Vec<(u32, u32)>>> = regions.iter().map(column_segments).collect();
    let cam = &dmap.camera;
    let mut out = Vec::new();
    for c in contours {
        // top of the highest segment ending just above the contour pixel; a
        // region may also continue below the rim, which does not count
        let above = |span: &FxHashMap<u32, Vec<(u32, u32)>>, p: &super::ContourPixel| {
            span.get(&p.col).and_then(|segs| {
                segs.iter()
                    .filter(|&&(_, bottom)| bottom <= p.row + cfg.pair_row_tol_px && p.row <= bottom + cfg.max_pair_gap_px)
                    .map(|&(top, _)| top)
                    .min()
            })
        };
        // regions lying mostly above this contour; a far wall often breaks
        // into several column-adjacent pieces
        let members: Vec<usize> = spans
            .iter()
            .enumerate()
            .filter(|(_, span)| {
                let n = c.pixels.iter().filter(|p| above(span, p).is_some()).count();
                n > 0 && n as f64 >= cfg.pair_overlap * span.len() as f64
            })
            .map(|(i, _)| i)
            .collect();
        if members.is_empty() {
            continue;
        }
        // topmost member row above each supported contour column
        let tops: Vec<Option<u32>> = c
            .pixels
            .iter()
            .map(|p| members.iter().filter_map(|&i| above(&spans[i], p)).min())
            .collect();
        let supported = tops.iter().flatten().count();
        let region_cols: std::collections::BTreeSet<u32> =
            members.iter().flat_map(|&i| spans[i].keys().copied()).collect();
        if (supported as f64) < cfg.pair_overlap * c.pixels.len().min(region_cols.len()) as f64 {
            continue;
        }
        let n = c.pixels.len();
        let keep = ((n as f64 * cfg.central_fraction).round() as usize).clamp(1, n);
        let first = (n - keep) / 2;
        let mut near = Vec::with_capacity(keep);
        let mut far = Vec::with_capacity(keep);
        for (p, top) in c.pixels[first..first + keep].iter().zip(&tops[first..first + keep]) {
            let Some(top) = *top else { continue };
            if let (Some(dn), Some(df)) = (mean_down(dmap, p.col, p.row, 3), mean_down(dmap, p.col, top, 3)) {
                near.push(cam.triangulate(p.col as f64, p.row as f64, dn));
                far.push(cam.triangulate(p.col as f64, top as f64, df));
            }
        }
        if near.is_empty() {
            continue;
        }
        let (n_pt, f_pt) = (median_xy(&near), median_xy(&far));
        let diameter = ((f_pt[0] - n_pt[0]).powi(2) + (f_pt[1] - n_pt[1]).powi(2)).sqrt();
        if !(cfg.min_diameter_m..=cfg.max_diameter_m).contains(&diameter) {
            continue;
        }
        let mid = [0.5 * (n_pt[0] + f_pt[0]), 0.5 * (n_pt[1] + f_pt[1])];
        out.push(CraterDetection {
            center_xy: pose.to_site(mid),
            diameter,
            score: c.mean_jump,
            landmark_id: None,
            method: Method::Stereo,
        });
    }
    out
}

fn column_segments(r: &FarWallRegion) -> FxHashMap<u32, Vec<(u32, u32)>> {
    let mut m: FxHashMap<u32, Vec<(u32, u32)>> = FxHashMap::default();
    for s in &r.segments {
        m.entry(s.col).or_default().push((s.top, s.bottom));
    }
    m
}

/// Mean disparity of up to `k` valid rows from `row` downward.
fn mean_down(dmap: &DisparityMap, col: u32, row: u32, k: u32) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0);
    for r in row..(row + k).min(dmap.height as u32) {
        if let Some(d) = dmap.get(col as usize, r as usize) {
            s += d;
            n += 1;
        }
    }
    (n > 0).then(|| s / n as f64)
}

fn median_xy(pts: &[Vec3]) -> [f64; 2] {
    let med = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        if v.len() % 2 == 1 {
            v[m]
        } else {
            0.5 * (v[m - 1] + v[m])
        }
    };
    [med(pts.iter().map(|p| p.x).collect()), med(pts.iter().map(|p| p.y).collect())]
}
