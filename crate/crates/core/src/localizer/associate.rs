use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::{MeasurementModel, RoverState};
use crate::detection::CraterDetection;
use crate::landmarks::{LandmarkDb, LandmarkRecord};
use crate::pose::dist2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssociationConfig {
    pub sensing_range_m: f64,
    pub diam_tol: f64,
    /// Chi-square gate (2 dof) on detection-to-landmark innovation.
    pub gate_chi2: f64,
    /// Floor of the pairwise consistency tolerance (m).
    pub consistency_tol_m: f64,
    /// Pairwise tolerance in standard deviations of the difference vector.
    pub consistency_sigmas: f64,
    /// Search nodes explored before settling for the best assignment so far.
    pub max_search_nodes: usize,
}

impl Default for AssociationConfig {
    fn default() -> Self {
        Self {
            sensing_range_m: 30.0,
            diam_tol: 0.3,
            gate_chi2: 13.82,
            consistency_tol_m: 1.0,
            consistency_sigmas: 3.0,
            max_search_nodes: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub detection: CraterDetection,
    pub landmark: LandmarkRecord,
    /// Distance between the detection and the landmark in the site frame (m).
    pub residual_m: f64,
    /// Variance added on top of the measurement model, e.g. for detections
    /// carried forward by dead reckoning (m^2 per axis).
    pub extra_variance: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchSet {
    pub matches: Vec<Match>,
}

impl MatchSet {
    pub fn len(&self) -> usize {
        self.matches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }

    pub fn landmark_ids(&self) -> Vec<u64> {
        self.matches.iter().map(|m| m.landmark.id).collect()
    }
}

/// Pairs detections to landmarks near the prior.
///
/// Candidates must agree in diameter and pass an innovation gate. Among all
/// assignments (one landmark per detection, each landmark used once), the one
/// with the most mutually consistent pairs wins: every pair of matched
/// detections must be offset like their landmarks, up to a tolerance.
/// Ties go to the smallest total normalized innovation.
pub fn associate(
    detections: &[CraterDetection],
    db: &LandmarkDb,
    prior: &RoverState,
    model: &MeasurementModel,
    cfg: &AssociationConfig,
) -> MatchSet {
    let weighted: Vec<(CraterDetection, f64)> = detections.iter().map(|d| (d.clone(), 0.0)).collect();
    associate_weighted(&weighted, db, prior, model, cfg)
}

/// As [`associate`], with an extra per-axis variance for each detection.
pub fn associate_weighted(
    detections: &[(CraterDetection, f64)],
    db: &LandmarkDb,
    prior: &RoverState,
    model: &MeasurementModel,
    cfg: &AssociationConfig,
) -> MatchSet {
    if detections.is_empty() || db.is_empty() {
        return MatchSet::default();
    }
    let p = prior.cov();
    let radius = 3.0 * prior.sigma_max() + cfg.sensing_range_m;
    let pool = db.query_radius(prior.position, radius, (0.0, f64::INFINITY));

    let vars: Vec<f64> = detections
        .iter()
        .map(|(d, extra)| {
            model.fix_variance(d, prior.position) + extra
        })
        .collect();

    // per detection: (landmark index in pool, chi2), best first
    let cands: Vec<Vec<(usize, f64)>> = detections
        .iter()
        .zip(&vars)
        .map(|((d, _), &v)| {
            let s = p + Matrix2::identity() * v;
            let Some(s_inv) = s.try_inverse() else {
                return Vec::new();
            };
            let mut c: Vec<(usize, f64)> = pool
                .iter()
                .enumerate()
                .filter(|(_, lm)| d.landmark_id.is_none_or(|id| id == lm.id))
                .filter(|(_, lm)| (d.diameter - lm.diameter_m).abs() <= cfg.diam_tol * lm.diameter_m)
                .filter_map(|(k, lm)| {
                    let nu = Vector2::new(lm.x_m - d.center_xy[0], lm.y_m - d.center_xy[1]);
                    let chi2 = nu.dot(&(s_inv * nu));
                    (chi2 <= cfg.gate_chi2).then_some((k, chi2))
                })
                .collect();
            c.sort_by(|a, b| a.1.total_cmp(&b.1).then(pool[a.0].id.cmp(&pool[b.0].id)));
            c
        })
        .collect();

    let mut search = Search {
        dets: detections,
        vars: &vars,
        pool: &pool,
        cands: &cands,
        cfg,
        current: vec![None; detections.len()],
        best: vec![None; detections.len()],
        best_key: (0, 0.0),
        nodes: 0,
    };
    search.run(0, 0, 0.0);

    let matches = search
        .best
        .iter()
        .enumerate()
        .filter_map(|(i, a)| {
            a.map(|k| {
                let lm = pool[k];
                Match {
                    detection: detections[i].0.clone(),
                    landmark: lm.clone(),
                    residual_m: dist2(detections[i].0.center_xy, lm.position()),
                    extra_variance: detections[i].1,
                }
            })
        })
        .collect();
    MatchSet { matches }
}

struct Search<'a> {
    dets: &'a [(CraterDetection, f64)],
    vars: &'a [f64],
    pool: &'a [&'a LandmarkRecord],
    cands: &'a [Vec<(usize, f64)>],
    cfg: &'a AssociationConfig,
    current: Vec<Option<usize>>,
    best: Vec<Option<usize>>,
    best_key: (usize, f64),
    nodes: usize,
}

impl Search<'_> {
    fn better(&self, count: usize, cost: f64) -> bool {
        count > self.best_key.0 || (count == self.best_key.0 && count > 0 && cost < self.best_key.1)
    }

    fn run(&mut self, i: usize, count: usize, cost: f64) {
        self.nodes += 1;
        if i == self.dets.len() {
            if self.better(count, cost) {
                self.best = self.current.clone();
                self.best_key = (count, cost);
            }
            return;
        }
        // even matching every remaining detection cannot beat the best
        if count + (self.dets.len() - i) < self.best_key.0 || self.nodes > self.cfg.max_search_nodes {
            return;
        }
        for ci in 0..self.cands[i].len() {
            let (k, chi2) = self.cands[i][ci];
            if self.current.contains(&Some(k)) || !self.consistent(i, k) {
                continue;
            }
            self.current[i] = Some(k);
            self.run(i + 1, count + 1, cost + chi2);
            self.current[i] = None;
        }
        self.run(i + 1, count, cost);
    }

    fn consistent(&self, i: usize, k: usize) -> bool {
        let (di, lk) = (&self.dets[i].0, self.pool[k]);
        (0..i).all(|j| {
            let Some(m) = self.current[j] else { return true };
            let (dj, lm) = (&self.dets[j].0, self.pool[m]);
            let ex = (di.center_xy[0] - dj.center_xy[0]) - (lk.x_m - lm.x_m);
            let ey = (di.center_xy[1] - dj.center_xy[1]) - (lk.y_m - lm.y_m);
            let tol = self
                .cfg
                .consistency_tol_m
                .max(self.cfg.consistency_sigmas * (self.vars[i] + self.vars[j]).sqrt());
            ex.hypot(ey) <= tol
        })
    }
}
