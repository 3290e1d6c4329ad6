//! Minimax outlier removal over two copies of a feature cloud.
//!
//! The objective over `X ⊆ N₁` (outlier candidates) and `Y ⊆ N₂`
//! (representatives) is
//!
//! ```text
//! f(X ∪ Y) = Σ_{v ∈ N₁∖X} max_{u ∈ Y} s(u, v) − (1/|N₂|) Σ_{u,w ∈ Y} s(u, w) + λ|X|
//! ```
//!
//! with `s(u, v) = 1 − 1/d(u, v)` and the max over an empty `Y` taken as 0,
//! which is what makes `f(∅) = 0`.
//!
//! [`iterative_x_growing`] alternates a greedy maximisation over `Y` with an
//! exact minimisation over `X`. For fixed `Y` and `X_prev` the minimisation
//! target `β f(X ∪ X_prev) + f(X ∪ Y)` is modular in `X`, so the minimiser is
//! found elementwise ([`exact_min_x`]). [`brute_force_minimax`] enumerates
//! everything on small instances and produces the reference value `τ`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{normalization_factor, score_from_distance, PointCloud3, ScoreParams};

pub type IndexSet = BTreeSet<usize>;

/// Limit on `|N₁|` for exhaustive enumeration.
pub const BRUTE_FORCE_MAX_N1: usize = 16;
/// Limit on the number of enumerated `Y` candidates.
pub const BRUTE_FORCE_MAX_Y: u64 = 1_000_000;

/// The two ground sets. Normally both are copies of one cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundSets {
    pub n1: PointCloud3,
    pub n2: PointCloud3,
}

impl GroundSets {
    pub fn new(n1: PointCloud3, n2: PointCloud3) -> Self {
        Self { n1, n2 }
    }

    pub fn copies(cloud: &PointCloud3) -> Self {
        Self::new(cloud.clone(), cloud.clone())
    }

    /// `s(u, v)` for `u ∈ N₂`, `v ∈ N₁`.
    #[inline]
    fn cross_score(&self, u: usize, v: usize, eps: f64) -> f64 {
        score_from_distance(self.n2.points[u].distance(&self.n1.points[v]), eps)
    }

    /// `s(u, w)` for `u, w ∈ N₂`.
    #[inline]
    fn rep_score(&self, u: usize, w: usize, eps: f64) -> f64 {
        score_from_distance(self.n2.points[u].distance(&self.n2.points[w]), eps)
    }

    /// `max_{u ∈ Y} s(u, v)`, 0 for empty `Y`.
    fn coverage(&self, y: &[usize], v: usize, eps: f64) -> f64 {
        y.iter()
            .map(|&u| self.cross_score(u, v, eps))
            .reduce(f64::max)
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutlierParams {
    /// Weight on the number of removed points.
    pub lambda: f64,
    /// Maximum number of representatives.
    pub k: usize,
    /// Weight on `f(X ∪ X_prev)` in the minimisation step.
    pub beta: f64,
    #[serde(default)]
    pub score: ScoreParams,
}

impl Default for OutlierParams {
    fn default() -> Self {
        Self {
            lambda: 0.6,
            k: 4,
            beta: 1.0,
            score: ScoreParams::default(),
        }
    }
}

impl OutlierParams {
    /// Values tuned on the planted-outlier benchmark (200 points in a unit
    /// ball, 20 points at radius 10..15, normalized scale); see
    /// `examples/calibrate_outliers.rs`.
    pub fn calibrated() -> Self {
        Self {
            lambda: 0.466,
            k: 4,
            beta: 1.0,
            score: ScoreParams {
                epsilon: 1e-6,
                normalize: true,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidConfig("outliers.k must be >= 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig("outliers.lambda must be >= 0".into()));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig("outliers.beta must be >= 0".into()));
        }
        if !(self.score.epsilon > 0.0 && self.score.epsilon.is_finite()) {
            return Err(Error::InvalidConfig("outliers.epsilon must be > 0".into()));
        }
        Ok(())
    }
}

/// One round of the growing loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionState {
    pub iteration: usize,
    /// `X_{i-1}` going into the round.
    pub x: IndexSet,
    /// `Y_i` chosen by the greedy oracle.
    pub y: IndexSet,
    /// `X'_i` returned by the minimisation step.
    pub x_candidate: IndexSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierResult {
    pub outliers: IndexSet,
    pub inliers: IndexSet,
    /// `f(X_{i-1} ∪ Y_i)` per round.
    pub objective_trace: Vec<f64>,
    pub states: Vec<SelectionState>,
    /// Scale applied to the cloud before scoring (1 unless normalizing).
    pub scale: f64,
}

impl OutlierResult {
    fn from_outliers(n1: usize, outliers: IndexSet, trace: Vec<f64>, states: Vec<SelectionState>) -> Self {
        let inliers = (0..n1).filter(|i| !outliers.contains(i)).collect();
        Self {
            outliers,
            inliers,
            objective_trace: trace,
            states,
            scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimaxCertificate {
    pub tau: f64,
    pub x_star: IndexSet,
    /// `max_{|Y| ≤ k} f(X ∪ Y)` for each `X`, indexed by bitmask over `N₁`.
    pub per_x_max: Vec<f64>,
}

impl MinimaxCertificate {
    pub fn max_for(&self, x: &IndexSet) -> f64 {
        self.per_x_max[mask_of(x)]
    }
}

pub(crate) fn mask_of(set: &IndexSet) -> usize {
    set.iter().fold(0usize, |m, &i| m | (1 << i))
}

fn set_of_mask(mask: usize, n: usize) -> IndexSet {
    (0..n).filter(|i| mask & (1 << i) != 0).collect()
}

fn check_indices(set: &IndexSet, len: usize) -> Result<()> {
    match set.iter().next_back() {
        Some(&index) if index >= len => Err(Error::IndexOutOfRange { index, len }),
        _ => Ok(()),
    }
}

/// Evaluate the outliers score `f(X ∪ Y)`.
pub fn eval_f(g: &GroundSets, x: &IndexSet, y: &IndexSet, params: &OutlierParams) -> Result<f64> {
    check_indices(x, g.n1.len())?;
    check_indices(y, g.n2.len())?;
    let y: Vec<usize> = y.iter().copied().collect();
    Ok(eval_unchecked(g, x, &y, params))
}

fn eval_unchecked(g: &GroundSets, x: &IndexSet, y: &[usize], params: &OutlierParams) -> f64 {
    let eps = params.score.epsilon;
    let facility: f64 = (0..g.n1.len())
        .filter(|v| !x.contains(v))
        .map(|v| g.coverage(y, v, eps))
        .sum();
    let pairwise = if y.is_empty() {
        0.0
    } else {
        let total: f64 = y
            .iter()
            .flat_map(|&u| y.iter().map(move |&w| (u, w)))
            .map(|(u, w)| g.rep_score(u, w, eps))
            .sum();
        total / g.n2.len() as f64
    };
    facility - pairwise + params.lambda * x.len() as f64
}

/// Greedy maximisation of `f(X ∪ Y)` over `Y ⊆ N₂`, `|Y| ≤ k`.
///
/// Adds the element with the largest marginal gain until `k` elements are
/// chosen or no gain is positive. Ties go to the smallest index.
pub fn greedy_max_y(g: &GroundSets, x: &IndexSet, params: &OutlierParams) -> IndexSet {
    let eps = params.score.epsilon;
    let n2 = g.n2.len();
    let kept: Vec<usize> = (0..g.n1.len()).filter(|v| !x.contains(v)).collect();
    let mut chosen: Vec<usize> = Vec::with_capacity(params.k);
    let mut in_y = vec![false; n2];
    // current max score per kept point; meaningless while `chosen` is empty
    let mut cover = vec![0.0f64; kept.len()];

    while chosen.len() < params.k {
        let mut best: Option<(usize, f64)> = None;
        for u in (0..n2).filter(|&u| !in_y[u]) {
            let facility_gain: f64 = if chosen.is_empty() {
                kept.iter().map(|&v| g.cross_score(u, v, eps)).sum()
            } else {
                kept.iter()
                    .zip(&cover)
                    .map(|(&v, &m)| (g.cross_score(u, v, eps) - m).max(0.0))
                    .sum()
            };
            let pair: f64 = 2.0 * chosen.iter().map(|&w| g.rep_score(u, w, eps)).sum::<f64>()
                + g.rep_score(u, u, eps);
            let gain = facility_gain - pair / n2 as f64;
            if best.is_none_or(|(_, b)| gain > b) {
                best = Some((u, gain));
            }
        }
        let Some((u, gain)) = best else { break };
        if gain <= 0.0 {
            break;
        }
        for (slot, &v) in cover.iter_mut().zip(&kept) {
            let s = g.cross_score(u, v, eps);
            *slot = if chosen.is_empty() { s } else { slot.max(s) };
        }
        chosen.push(u);
        in_y[u] = true;
    }
    chosen.into_iter().collect()
}

/// Exact minimiser of `β f(X ∪ X_prev) + f(X ∪ Y)` over `X ⊆ N₁`.
///
/// With `Y` and `X_prev` fixed, including `v` costs `λ(1 + β[v ∉ X_prev])`
/// and saves `max_{u ∈ Y} s(u, v)`; `v` is included only when the saving is
/// strictly larger.
pub fn exact_min_x(g: &GroundSets, x_prev: &IndexSet, y: &IndexSet, params: &OutlierParams) -> IndexSet {
    let eps = params.score.epsilon;
    let y: Vec<usize> = y.iter().copied().collect();
    (0..g.n1.len())
        .filter(|v| {
            let cost = params.lambda * (1.0 + if x_prev.contains(v) { 0.0 } else { params.beta });
            cost < g.coverage(&y, *v, eps)
        })
        .collect()
}

/// Iterative X growing with the greedy oracle and exact minimisation.
/// The returned `X` is reported as the outlier set.
pub fn iterative_x_growing(g: &GroundSets, params: &OutlierParams) -> OutlierResult {
    let n1 = g.n1.len();
    let mut x = exact_min_x(g, &IndexSet::new(), &IndexSet::new(), params);
    let mut trace = Vec::new();
    let mut states = Vec::new();

    for iteration in 1..=n1 + 1 {
        let y = greedy_max_y(g, &x, params);
        let yv: Vec<usize> = y.iter().copied().collect();
        trace.push(eval_unchecked(g, &x, &yv, params));
        let candidate = exact_min_x(g, &x, &y, params);
        let done = candidate.is_subset(&x);
        states.push(SelectionState {
            iteration,
            x: x.clone(),
            y,
            x_candidate: candidate.clone(),
        });
        if done {
            break;
        }
        x.extend(candidate);
    }
    OutlierResult::from_outliers(n1, x, trace, states)
}

fn binomial_prefix_sum(n: usize, k: usize) -> u64 {
    let mut total: u64 = 0;
    let mut c: u64 = 1;
    for j in 0..=k.min(n) {
        total = total.saturating_add(c);
        c = c.saturating_mul((n - j) as u64) / (j as u64 + 1);
    }
    total
}

/// All subsets of `0..n` with at most `k` elements, by size then lexicographically.
fn bounded_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..k.min(n) {
        let mut next = Vec::new();
        for s in &frontier {
            let start = s.last().map_or(0, |&l| l + 1);
            for e in start..n {
                let mut t = s.clone();
                t.push(e);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Exhaustive `τ = min_X max_{|Y| ≤ k} f(X ∪ Y)`.
pub fn brute_force_minimax(g: &GroundSets, params: &OutlierParams) -> Result<MinimaxCertificate> {
    let n1 = g.n1.len();
    if n1 > BRUTE_FORCE_MAX_N1 {
        return Err(Error::InstanceTooLarge(format!(
            "|N1| = {n1} exceeds {BRUTE_FORCE_MAX_N1}"
        )));
    }
    let y_count = binomial_prefix_sum(g.n2.len(), params.k);
    if y_count > BRUTE_FORCE_MAX_Y {
        return Err(Error::InstanceTooLarge(format!(
            "{y_count} representative sets exceed {BRUTE_FORCE_MAX_Y}"
        )));
    }
    let ys = bounded_subsets(g.n2.len(), params.k);
    let mut per_x_max = Vec::with_capacity(1 << n1);
    for mask in 0..(1usize << n1) {
        let x = set_of_mask(mask, n1);
        let best = ys
            .iter()
            .map(|y| eval_unchecked(g, &x, y, params))
            .fold(f64::NEG_INFINITY, f64::max);
        per_x_max.push(best);
    }
    let (star, tau) = per_x_max
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |(bm, bv), (m, v)| if v < bv { (m, v) } else { (bm, bv) });
    Ok(MinimaxCertificate {
        tau,
        x_star: set_of_mask(star, n1),
        per_x_max,
    })
}

/// Run outlier removal on a cloud, scoring against a copy of itself.
pub fn remove_outliers(cloud: &PointCloud3, params: &OutlierParams) -> Result<OutlierResult> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    params.validate()?;
    let scale = if params.score.normalize {
        normalization_factor(cloud)
    } else {
        1.0
    };
    let scored = if scale == 1.0 { cloud.clone() } else { cloud.scaled(scale) };
    let mut result = iterative_x_growing(&GroundSets::copies(&scored), params);
    result.scale = scale;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set(items: &[usize]) -> IndexSet {
        items.iter().copied().collect()
    }

    fn pair_ab() -> GroundSets {
        GroundSets::copies(&PointCloud3::new(vec![Point3::ORIGIN, Point3::new(0.0, 0.0, 2.0)]))
    }

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize, side: f64) -> PointCloud3 {
        PointCloud3::new(
            (0..n)
                .map(|_| {
                    Point3::new(
                        rng.random_range(0.0..side),
                        rng.random_range(0.0..side),
                        rng.random_range(0.0..side),
                    )
                })
                .collect(),
        )
    }

    #[test]
    fn empty_sets_score_zero() {
        let g = pair_ab();
        let v = eval_f(&g, &IndexSet::new(), &IndexSet::new(), &OutlierParams::default()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn hand_evaluated_values() {
        let g = pair_ab();
        let p = OutlierParams::default();
        let f = eval_f(&g, &IndexSet::new(), &set(&[0, 1]), &p).unwrap();
        assert!((f - 0.5).abs() < 1e-15);
        let f = eval_f(&g, &set(&[0]), &set(&[1]), &p).unwrap();
        assert!((f - 0.6).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_index() {
        let g = pair_ab();
        let r = eval_f(&g, &set(&[2]), &IndexSet::new(), &OutlierParams::default());
        assert!(matches!(r, Err(Error::IndexOutOfRange { index: 2, len: 2 })));
        let r = eval_f(&g, &IndexSet::new(), &set(&[5]), &OutlierParams::default());
        assert!(matches!(r, Err(Error::IndexOutOfRange { index: 5, len: 2 })));
    }

    #[test]
    fn greedy_tie_breaks_by_index() {
        let g = pair_ab();
        let p = OutlierParams { k: 1, ..Default::default() };
        assert_eq!(greedy_max_y(&g, &IndexSet::new(), &p), set(&[0]));
    }

    #[test]
    fn greedy_on_empty_n2() {
        let g = GroundSets::new(PointCloud3::new(vec![Point3::ORIGIN]), PointCloud3::default());
        assert!(greedy_max_y(&g, &IndexSet::new(), &OutlierParams::default()).is_empty());
    }

    #[test]
    fn greedy_stops_without_positive_gain() {
        // all distances below 1: every score is negative or zero
        let cloud = PointCloud3::new(vec![
            Point3::ORIGIN,
            Point3::new(0.3, 0.0, 0.0),
            Point3::new(0.0, 0.4, 0.0),
            Point3::new(0.2, 0.2, 0.2),
        ]);
        let g = GroundSets::copies(&cloud);
        let p = OutlierParams { lambda: 0.0, k: 4, ..Default::default() };
        let y = greedy_max_y(&g, &IndexSet::new(), &p);
        let greedy_value = eval_f(&g, &IndexSet::new(), &y, &p).unwrap();
        let best = bounded_subsets(4, 4)
            .iter()
            .map(|y| eval_unchecked(&g, &IndexSet::new(), y, &p))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(greedy_value <= best);
        assert!(y.len() < 4);
    }

    #[test]
    fn minimisation_examples() {
        let g = GroundSets::copies(&PointCloud3::new(vec![
            Point3::ORIGIN,
            Point3::new(10.0, 0.0, 0.0),
        ]));
        let p = OutlierParams::default();
        assert!(exact_min_x(&g, &IndexSet::new(), &IndexSet::new(), &p).is_empty());

        let p0 = OutlierParams { beta: 0.0, ..Default::default() };
        // representative 0 covers point 1 with s = 0.9 > 0.6
        assert_eq!(exact_min_x(&g, &IndexSet::new(), &set(&[0]), &p0), set(&[1]));
        // inclusion cost 1.2 exceeds any score
        assert!(exact_min_x(&g, &IndexSet::new(), &set(&[0]), &p).is_empty());
        // an element already in X_prev only pays lambda
        assert_eq!(exact_min_x(&g, &set(&[1]), &set(&[0]), &p), set(&[1]));
    }

    #[test]
    fn minimisation_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let n = rng.random_range(1..=7);
            let g = GroundSets::copies(&random_cloud(&mut rng, n, 4.0));
            let p = OutlierParams {
                lambda: rng.random_range(0.0..0.8),
                beta: rng.random_range(0.0..1.5),
                k: 3,
                ..Default::default()
            };
            let x_prev = set_of_mask(rng.random_range(0..(1usize << n)), n);
            let y = set_of_mask(rng.random_range(0..(1usize << n)), n);
            let target = |x: &IndexSet| {
                let union: IndexSet = x.union(&x_prev).copied().collect();
                p.beta * eval_f(&g, &union, &IndexSet::new(), &p).unwrap()
                    + eval_f(&g, x, &y, &p).unwrap()
            };
            let best = (0..(1usize << n))
                .map(|m| target(&set_of_mask(m, n)))
                .fold(f64::INFINITY, f64::min);
            let ours = target(&exact_min_x(&g, &x_prev, &y, &p));
            assert!((ours - best).abs() <= 1e-9, "{ours} vs {best}");
        }
    }

    #[test]
    fn growing_on_empty_n1() {
        let r = iterative_x_growing(
            &GroundSets::new(PointCloud3::default(), PointCloud3::default()),
            &OutlierParams::default(),
        );
        assert!(r.outliers.is_empty() && r.inliers.is_empty());
    }

    #[test]
    fn growing_chain_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.random_range(2..=12);
            let g = GroundSets::copies(&random_cloud(&mut rng, n, 30.0));
            let p = OutlierParams { lambda: 0.35, beta: 0.3, k: 2, ..Default::default() };
            let r = iterative_x_growing(&g, &p);
            assert!(r.states.len() <= n + 1);
            for w in r.states.windows(2) {
                assert!(w[0].x.is_subset(&w[1].x));
            }
            assert!(r.states.iter().all(|s| s.y.len() <= p.k));
            let all: IndexSet = r.outliers.union(&r.inliers).copied().collect();
            assert_eq!(all, (0..n).collect());
            assert!(r.outliers.is_disjoint(&r.inliers));
        }
    }

    #[test]
    fn brute_force_singleton() {
        let g = GroundSets::copies(&PointCloud3::new(vec![Point3::ORIGIN]));
        let p = OutlierParams { k: 1, ..Default::default() };
        let c = brute_force_minimax(&g, &p).unwrap();
        assert_eq!(c.tau, 0.0);
        assert!(c.x_star.is_empty());
        assert_eq!(c.per_x_max, vec![0.0, 0.6]);
    }

    #[test]
    fn brute_force_empty_n1() {
        let n2 = PointCloud3::new(vec![Point3::ORIGIN, Point3::new(3.0, 0.0, 0.0)]);
        let g = GroundSets::new(PointCloud3::default(), n2);
        let p = OutlierParams { k: 2, ..Default::default() };
        let c = brute_force_minimax(&g, &p).unwrap();
        // facility term vanishes; only -pairwise remains, maximised by Y = ∅
        assert_eq!(c.per_x_max.len(), 1);
        assert_eq!(c.tau, 0.0);
    }

    #[test]
    fn brute_force_guard() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = GroundSets::copies(&random_cloud(&mut rng, 17, 5.0));
        assert!(matches!(
            brute_force_minimax(&g, &OutlierParams::default()),
            Err(Error::InstanceTooLarge(_))
        ));
        assert_eq!(binomial_prefix_sum(4, 2), 1 + 4 + 6);
        assert_eq!(bounded_subsets(4, 2).len(), 11);
    }

    #[test]
    fn certificate_consistency_and_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let n = rng.random_range(1..=6);
            let g = GroundSets::copies(&random_cloud(&mut rng, n, 5.0));
            let p = OutlierParams { lambda: 0.3, beta: 0.5, k: 2, ..Default::default() };
            let c = brute_force_minimax(&g, &p).unwrap();
            assert_eq!(c.max_for(&c.x_star), c.tau);
            assert!(c.per_x_max.iter().all(|&v| v >= c.tau));
            let r = iterative_x_growing(&g, &p);
            assert!(c.max_for(&r.outliers) >= c.tau - 1e-9);
        }
    }

    #[test]
    fn single_point_is_inlier() {
        let r = remove_outliers(&PointCloud3::new(vec![Point3::new(1.0, 2.0, 3.0)]), &OutlierParams::default())
            .unwrap();
        assert!(r.outliers.is_empty());
        assert_eq!(r.inliers, set(&[0]));
    }

    #[test]
    fn empty_cloud_rejected() {
        assert!(matches!(
            remove_outliers(&PointCloud3::default(), &OutlierParams::default()),
            Err(Error::EmptyCloud)
        ));
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cloud = random_cloud(&mut rng, 40, 20.0);
        let p = OutlierParams::calibrated();
        assert_eq!(remove_outliers(&cloud, &p).unwrap(), remove_outliers(&cloud, &p).unwrap());
    }

    #[test]
    fn invalid_params() {
        assert!(OutlierParams { k: 0, ..Default::default() }.validate().is_err());
        assert!(OutlierParams { lambda: -1.0, ..Default::default() }.validate().is_err());
        assert!(OutlierParams { beta: f64::NAN, ..Default::default() }.validate().is_err());
    }
}
