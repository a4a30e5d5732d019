//! Joint power allocation and device scheduling.
//!
//! Both optimizers share the same inner step: for a fixed activation vector
//! the power allocation comes from [`crate::palloc::solve_p2_with`], and the
//! resulting operating point is scored by the error bound `1 - phi_lb` and the
//! latency bound `xi_ub`.
//!
//! * [`optimal_jpads`] enumerates every nonempty activation and keeps the
//!   non-dominated points.
//! * [`fast_jpads`] runs a flip-`L` local search on the weighted sum
//!   `mu (1 - phi_lb) + (1 - mu) xi_ub`.

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::fusion::phi_lb_from_sinr;
use crate::latency::{xi_ub, LatencyBreakdown};
use crate::palloc::{solve_p2_with, PowerAllocation};
use crate::phy::{spectral_efficiency, PhyCache, PhyState};
use crate::scenario::{Activation, ScenarioConfig};

/// Largest network [`optimal_jpads`] will enumerate (2^N activations).
pub const ENUMERATION_CAP: usize = 20;

/// Attempts at finding a feasible starting point for the local search.
const START_ATTEMPTS: usize = 100;

/// One scored operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub x: Activation,
    pub allocation: PowerAllocation,
    /// `1 - phi_lb`
    pub error_lb_comp: f64,
    /// `xi_ub`, seconds.
    pub latency_ub: f64,
    /// Minimum uplink SINR achieved by the allocation.
    pub t_star: f64,
    pub latency: LatencyBreakdown,
    /// Guaranteed number of qualified devices used in the bound.
    pub z: usize,
    /// Sensing SINR per device (0 when inactive).
    pub sensing_sinr: Vec<f64>,
    /// Uplink SINR per device (0 when inactive).
    pub comm_sinr: Vec<f64>,
}

impl EvalPoint {
    pub fn objectives(&self) -> (f64, f64) {
        (self.error_lb_comp, self.latency_ub)
    }

    pub fn phi_lb(&self) -> f64 {
        1.0 - self.error_lb_comp
    }

    /// Weakly better in both objectives and strictly better in one.
    pub fn dominates(&self, other: &EvalPoint) -> bool {
        dominates(self.objectives(), other.objectives())
    }
}

pub fn dominates(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.0 && a.1 <= b.1 && (a.0 < b.0 || a.1 < b.1)
}

/// Scores activation vectors, memoizing the linear algebra per active set.
pub struct Evaluator<'a> {
    cfg: &'a ScenarioConfig,
    chans: &'a ChannelSet,
    phy: PhyCache<'a>,
}

impl<'a> Evaluator<'a> {
    pub fn new(cfg: &'a ScenarioConfig, chans: &'a ChannelSet) -> Self {
        Evaluator {
            cfg,
            chans,
            phy: PhyCache::new(cfg, chans),
        }
    }

    pub fn config(&self) -> &ScenarioConfig {
        self.cfg
    }

    pub fn channels(&self) -> &ChannelSet {
        self.chans
    }

    pub fn evaluate(&self, x: Activation) -> Result<EvalPoint> {
        if x.is_empty() {
            return Err(Error::EmptySet);
        }
        let phy = self.phy.get(x)?;
        self.evaluate_state(&phy)
    }

    /// Like [`Evaluator::evaluate`] but bypasses the memo; used when every
    /// activation is visited once.
    pub fn evaluate_uncached(&self, x: Activation) -> Result<EvalPoint> {
        if x.is_empty() {
            return Err(Error::EmptySet);
        }
        self.evaluate_state(&PhyState::compute(self.cfg, self.chans, x)?)
    }

    fn evaluate_state(&self, phy: &PhyState) -> Result<EvalPoint> {
        let sol = solve_p2_with(phy, self.chans, self.cfg)?;
        self.score_state(phy, sol.allocation, sol.t_star, true)
    }

    /// Scores a given allocation for `x`. `comm_interference` controls whether
    /// uplink leakage degrades the sensing SINRs.
    pub fn score(
        &self,
        x: Activation,
        allocation: PowerAllocation,
        t_star: f64,
        comm_interference: bool,
    ) -> Result<EvalPoint> {
        let phy = self.phy.get(x)?;
        self.score_state(&phy, allocation, t_star, comm_interference)
    }

    fn score_state(
        &self,
        phy: &PhyState,
        allocation: PowerAllocation,
        t_star: f64,
        comm_interference: bool,
    ) -> Result<EvalPoint> {
        let x = phy.activation;
        let sensing_sinr = phy.sensing_sinr(self.cfg, self.chans, &allocation, comm_interference);
        let bound = phi_lb_from_sinr(self.cfg, x, &sensing_sinr)?;
        let comm_sinr = phy.comm_sinr(self.chans, &allocation);
        let rates = comm_sinr
            .iter()
            .map(|&s| spectral_efficiency(s))
            .collect::<Result<Vec<_>>>()?;
        let latency = xi_ub(self.cfg, &rates, &phy.active)?;
        Ok(EvalPoint {
            x,
            allocation,
            error_lb_comp: 1.0 - bound.phi_lb,
            latency_ub: latency.xi_ub,
            t_star,
            latency,
            z: bound.z,
            sensing_sinr,
            comm_sinr,
        })
    }
}

pub fn evaluate(cfg: &ScenarioConfig, chans: &ChannelSet, x: Activation) -> Result<EvalPoint> {
    Evaluator::new(cfg, chans).evaluate(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    /// Found by exhaustive enumeration.
    Enumeration,
    /// Best point of a local search run with this weight.
    Weight(f64),
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Enumeration => write!(f, "enumeration"),
            Provenance::Weight(mu) => write!(f, "mu={mu}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontPoint {
    pub point: EvalPoint,
    pub provenance: Provenance,
}

/// Mutually non-dominated points ordered by increasing latency.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParetoFront {
    pub points: Vec<FrontPoint>,
}

impl ParetoFront {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &EvalPoint> {
        self.points.iter().map(|p| &p.point)
    }

    /// Whether some member is at least as good as `point` in both objectives.
    pub fn weakly_dominates(&self, point: &EvalPoint) -> bool {
        self.iter()
            .any(|m| m.error_lb_comp <= point.error_lb_comp && m.latency_ub <= point.latency_ub)
    }

    /// Smallest weighted sum over the members.
    pub fn min_psi(&self, mu: f64) -> Option<f64> {
        self.iter()
            .filter_map(|p| weighted_psi(p, mu).ok())
            .min_by(f64::total_cmp)
    }
}

/// Keeps the maximal non-dominated subset. Among points with identical
/// objective vectors the lexicographically smallest activation survives.
pub fn pareto_filter_tagged(mut points: Vec<FrontPoint>) -> ParetoFront {
    points.sort_by(|a, b| {
        a.point
            .error_lb_comp
            .total_cmp(&b.point.error_lb_comp)
            .then(a.point.latency_ub.total_cmp(&b.point.latency_ub))
            .then_with(|| a.point.x.bits().cmp(&b.point.x.bits()))
    });
    let mut best_latency = f64::INFINITY;
    let mut kept = Vec::new();
    for p in points {
        if p.point.latency_ub < best_latency {
            best_latency = p.point.latency_ub;
            kept.push(p);
        }
    }
    kept.sort_by(|a, b| {
        a.point
            .latency_ub
            .total_cmp(&b.point.latency_ub)
            .then(a.point.error_lb_comp.total_cmp(&b.point.error_lb_comp))
    });
    ParetoFront { points: kept }
}

pub fn pareto_filter(points: &[EvalPoint]) -> ParetoFront {
    pareto_filter_tagged(
        points
            .iter()
            .cloned()
            .map(|point| FrontPoint {
                point,
                provenance: Provenance::Enumeration,
            })
            .collect(),
    )
}

/// Every feasible nonempty activation, in increasing bitmask order.
pub fn enumerate_feasible(cfg: &ScenarioConfig, chans: &ChannelSet) -> Result<Vec<EvalPoint>> {
    let n = cfg.n_devices();
    if n > ENUMERATION_CAP {
        return Err(Error::SizeLimit(format!(
            "exhaustive search over {n} devices exceeds the cap of {ENUMERATION_CAP}"
        )));
    }
    let evaluator = Evaluator::new(cfg, chans);
    let points: Vec<Option<EvalPoint>> = (1u32..(1u32 << n))
        .into_par_iter()
        .map(|mask| {
            let x = Activation::from_mask(mask, n).expect("mask within range");
            evaluator.evaluate_uncached(x).ok()
        })
        .collect();
    Ok(points.into_iter().flatten().collect())
}

/// Exhaustive two-tier search: every activation, optimal powers for each.
pub fn optimal_jpads(cfg: &ScenarioConfig, chans: &ChannelSet) -> Result<ParetoFront> {
    let points = enumerate_feasible(cfg, chans)?;
    if points.is_empty() {
        return Err(Error::AllInfeasible);
    }
    Ok(pareto_filter(&points))
}

/// `mu (1 - phi_lb) + (1 - mu) xi_ub` in raw units.
pub fn weighted_psi(point: &EvalPoint, mu: f64) -> Result<f64> {
    weighted_psi_scaled(point, mu, [1.0, 1.0])
}

/// Weighted sum with each objective divided by its scale.
pub fn weighted_psi_scaled(point: &EvalPoint, mu: f64, scale: [f64; 2]) -> Result<f64> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::Domain(format!("weight mu must lie in [0, 1], got {mu}")));
    }
    Ok(mu * point.error_lb_comp / scale[0] + (1.0 - mu) * point.latency_ub / scale[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FastJpadsParams {
    pub mu: f64,
    pub max_iters: usize,
    pub flip_size: usize,
    pub resample_cap: usize,
    pub seed: u64,
}

impl Default for FastJpadsParams {
    fn default() -> Self {
        FastJpadsParams {
            mu: 0.5,
            max_iters: 10,
            flip_size: 2,
            resample_cap: 50,
            seed: 0,
        }
    }
}

impl FastJpadsParams {
    /// Caps the flip size at the network size, so defaults stay usable on
    /// very small networks.
    pub fn clamped_to(self, n: usize) -> Self {
        FastJpadsParams {
            flip_size: self.flip_size.min(n.max(1)),
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FastJpadsOutcome {
    /// Objective of the starting point followed by the objective after each
    /// iteration (`max_iters + 1` entries).
    pub trajectory: Vec<f64>,
    /// Current activation after each iteration.
    pub path: Vec<Activation>,
    pub best: EvalPoint,
    /// Distinct activations scored during the run.
    pub evaluations: usize,
}

struct MemoEvaluator<'e, 'a> {
    inner: &'e Evaluator<'a>,
    memo: HashMap<u32, Option<EvalPoint>>,
}

impl MemoEvaluator<'_, '_> {
    fn get(&mut self, x: Activation) -> Option<&EvalPoint> {
        let inner = self.inner;
        self.memo
            .entry(x.mask())
            .or_insert_with(|| inner.evaluate(x).ok())
            .as_ref()
    }
}

fn starting_point(evals: &mut MemoEvaluator<'_, '_>, n: usize, rng: &mut ChaCha8Rng) -> Option<Activation> {
    let all = Activation::all(n);
    if evals.get(all).is_some() {
        return Some(all);
    }
    for attempt in 1..START_ATTEMPTS {
        // subset sizes shrink from N-1 towards 1 over the attempts
        let size = (n - (attempt * n) / START_ATTEMPTS).clamp(1, n.saturating_sub(1).max(1));
        let picked: Vec<usize> = sample(rng, n, size).into_vec();
        let x = Activation::from_indices(&picked, n).expect("indices in range");
        if evals.get(x).is_some() {
            return Some(x);
        }
    }
    None
}

/// Flip-`L` local search on the weighted-sum objective.
pub fn fast_jpads_with(evaluator: &Evaluator<'_>, params: &FastJpadsParams) -> Result<FastJpadsOutcome> {
    let cfg = evaluator.config();
    let n = cfg.n_devices();
    if params.max_iters == 0 {
        return Err(Error::Domain("fast-JPADS needs at least one iteration".into()));
    }
    if params.flip_size == 0 || params.flip_size > n {
        return Err(Error::Domain(format!(
            "flip size must lie in 1..={n}, got {}",
            params.flip_size
        )));
    }
    if params.resample_cap == 0 {
        return Err(Error::Domain("resample cap must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&params.mu) {
        return Err(Error::Domain(format!("weight mu must lie in [0, 1], got {}", params.mu)));
    }
    let scale = cfg.psi_scale;
    let psi = |p: &EvalPoint| weighted_psi_scaled(p, params.mu, scale).expect("mu validated");

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut evals = MemoEvaluator {
        inner: evaluator,
        memo: HashMap::new(),
    };
    let mut current = starting_point(&mut evals, n, &mut rng).ok_or(Error::AllInfeasible)?;
    let mut current_psi = psi(evals.get(current).expect("start is feasible"));
    let mut trajectory = vec![current_psi];
    let mut path = vec![current];

    for _ in 0..params.max_iters {
        for _ in 0..params.resample_cap {
            let mut candidate = current;
            for k in sample(&mut rng, n, params.flip_size) {
                candidate = candidate.flip(k);
            }
            if candidate.is_empty() {
                continue;
            }
            let Some(point) = evals.get(candidate) else {
                continue;
            };
            let candidate_psi = psi(point);
            if candidate_psi <= current_psi {
                current = candidate;
                current_psi = candidate_psi;
                break;
            }
        }
        trajectory.push(current_psi);
        path.push(current);
    }
    let best = evals.get(current).cloned().expect("current is feasible");
    let evaluations = evals.memo.len();
    Ok(FastJpadsOutcome {
        trajectory,
        path,
        best,
        evaluations,
    })
}

pub fn fast_jpads(cfg: &ScenarioConfig, chans: &ChannelSet, params: &FastJpadsParams) -> Result<FastJpadsOutcome> {
    fast_jpads_with(&Evaluator::new(cfg, chans), params)
}

/// Runs the local search once per weight and keeps the non-dominated results.
pub fn error_latency_region(
    cfg: &ScenarioConfig,
    chans: &ChannelSet,
    mu_grid: &[f64],
    max_iters: usize,
    flip_size: usize,
    seed: u64,
) -> Result<ParetoFront> {
    if mu_grid.is_empty() {
        return Err(Error::Domain("weight grid is empty".into()));
    }
    let evaluator = Evaluator::new(cfg, chans);
    let results = mu_grid
        .par_iter()
        .enumerate()
        .map(|(k, &mu)| {
            let params = FastJpadsParams {
                mu,
                max_iters,
                flip_size,
                seed: seed.wrapping_add(k as u64),
                ..FastJpadsParams::default()
            }
            .clamped_to(cfg.n_devices());
            fast_jpads_with(&evaluator, &params).map(|o| FrontPoint {
                point: o.best,
                provenance: Provenance::Weight(mu),
            })
        })
        .collect::<Vec<_>>();
    let points = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(pareto_filter_tagged(points))
}

/// Random activation with a given number of devices; used by tests and
/// benchmarks that need reproducible subsets.
pub fn random_activation<R: Rng + ?Sized>(rng: &mut R, n: usize, size: usize) -> Activation {
    let picked: Vec<usize> = sample(rng, n, size.clamp(1, n)).into_vec();
    Activation::from_indices(&picked, n).expect("indices in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::gen_channels;
    use crate::fusion::fusion_accuracy_exact;
    use crate::palloc::solve_p2;
    use crate::scenario::default_fig2a;
    use approx::assert_relative_eq;

    fn point(err: f64, lat: f64, mask: u32) -> EvalPoint {
        EvalPoint {
            x: Activation::from_mask(mask, 4).unwrap(),
            allocation: PowerAllocation::zeros(4),
            error_lb_comp: err,
            latency_ub: lat,
            t_star: 1.0,
            latency: LatencyBreakdown {
                t_comm: lat,
                t_comp: 0.0,
                xi_ub: lat,
            },
            z: 0,
            sensing_sinr: vec![0.0; 4],
            comm_sinr: vec![1.0; 4],
        }
    }

    #[test]
    fn psi_weights() {
        let p = point(0.2, 0.4, 1);
        assert_relative_eq!(weighted_psi(&p, 1.0).unwrap(), 0.2);
        assert_relative_eq!(weighted_psi(&p, 0.0).unwrap(), 0.4);
        assert_relative_eq!(weighted_psi(&p, 0.5).unwrap(), 0.3, epsilon = 1e-15);
        assert!(weighted_psi(&p, 1.5).is_err());
        assert!(weighted_psi(&p, -0.1).is_err());
    }

    #[test]
    fn filter_small_cases() {
        let front = pareto_filter(&[point(0.1, 1.0, 1), point(0.2, 2.0, 2)]);
        assert_eq!(front.len(), 1);
        assert_eq!(front.points[0].point.x.mask(), 1);

        let front = pareto_filter(&[point(0.1, 2.0, 1), point(0.2, 1.0, 2)]);
        assert_eq!(front.len(), 2);
        // ordered by latency
        assert_eq!(front.points[0].point.latency_ub, 1.0);

        // ties keep the lexicographically smallest x = (x1, x2, ...)
        let front = pareto_filter(&[point(0.1, 1.0, 0b0001), point(0.1, 1.0, 0b0010)]);
        assert_eq!(front.len(), 1);
        assert_eq!(front.points[0].point.x.bits(), vec![0, 1, 0, 0]);
    }

    #[test]
    fn filter_random_points_audit() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let pts: Vec<EvalPoint> = (0..100)
            .map(|k| point(rng.random::<f64>(), rng.random::<f64>(), (k % 15) + 1))
            .collect();
        let front = pareto_filter(&pts);
        for a in front.iter() {
            assert!(!pts.iter().any(|b| b.dominates(a)));
        }
        for p in &pts {
            let kept = front.iter().any(|m| m.objectives() == p.objectives());
            assert!(kept || pts.iter().any(|b| b.dominates(p)));
        }
    }

    #[test]
    fn evaluate_composes_modules() {
        let cfg = default_fig2a();
        let ch = gen_channels(&cfg, 1);
        let x = Activation::single(2, 8).unwrap();
        let p = evaluate(&cfg, &ch, x).unwrap();
        assert_eq!(p.z, 0);
        let rate = (1.0 + p.t_star).log2();
        let lat = cfg.data_bits / (cfg.bandwidth * rate) + cfg.n_flop / cfg.compute_speed;
        assert_relative_eq!(p.latency_ub, lat, max_relative = 1e-6);
        assert_relative_eq!(p.error_lb_comp, 0.3, epsilon = 1e-12);

        let x = Activation::from_indices(&[0, 1], 8).unwrap();
        let p = evaluate(&cfg, &ch, x).unwrap();
        assert_eq!(p.z, 1);
        let expect = 1.0 - fusion_accuracy_exact(2, 1, &cfg.fusion_params(), 1).unwrap();
        assert_relative_eq!(p.error_lb_comp, expect, epsilon = 1e-12);
        let sol = solve_p2(&cfg, &ch, x).unwrap();
        assert_eq!(p.allocation, sol.allocation);

        let mut strict = cfg.clone();
        strict.beta = 1e12;
        assert!(matches!(evaluate(&strict, &ch, x), Err(Error::Infeasible { .. })));
        assert!(matches!(
            evaluate(&cfg, &ch, Activation::from_mask(0, 8).unwrap()),
            Err(Error::EmptySet)
        ));
    }

    fn two_device_cfg() -> ScenarioConfig {
        let mut cfg = default_fig2a();
        cfg.device_positions = vec![[0.0, 5.0], [10.0, 5.0]];
        cfg
    }

    #[test]
    fn two_device_front_by_hand() {
        let cfg = two_device_cfg();
        let ch = gen_channels(&cfg, 5);
        let all = enumerate_feasible(&cfg, &ch).unwrap();
        assert!(all.len() <= 3);
        let front = optimal_jpads(&cfg, &ch).unwrap();
        for p in &all {
            let dominated = all.iter().any(|q| q.dominates(p));
            let in_front = front.iter().any(|m| m.x == p.x);
            assert_eq!(in_front, !dominated, "{}", p.x);
        }
    }

    #[test]
    fn single_device_network() {
        let mut cfg = default_fig2a();
        cfg.device_positions = vec![[0.0, 5.0]];
        let ch = gen_channels(&cfg, 0);
        assert_eq!(optimal_jpads(&cfg, &ch).unwrap().len(), 1);
        assert_eq!(error_latency_region(&cfg, &ch, &[0.5], 10, 2, 0).unwrap().len(), 1);
        cfg.beta = 1e12;
        assert!(matches!(optimal_jpads(&cfg, &ch), Err(Error::AllInfeasible)));
        assert!(matches!(
            fast_jpads(&cfg, &ch, &FastJpadsParams::default().clamped_to(1)),
            Err(Error::AllInfeasible)
        ));
    }

    #[test]
    fn fast_search_argument_guards() {
        let cfg = default_fig2a();
        let ch = gen_channels(&cfg, 0);
        let bad = [
            FastJpadsParams { max_iters: 0, ..Default::default() },
            FastJpadsParams { flip_size: 0, ..Default::default() },
            FastJpadsParams { flip_size: 9, ..Default::default() },
            FastJpadsParams { mu: 1.2, ..Default::default() },
        ];
        for params in bad {
            assert!(matches!(fast_jpads(&cfg, &ch, &params), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn fast_search_is_monotone_and_deterministic() {
        let cfg = default_fig2a();
        let ch = gen_channels(&cfg, 2);
        for seed in 0..5 {
            let params = FastJpadsParams { seed, flip_size: 2, ..Default::default() };
            let a = fast_jpads(&cfg, &ch, &params).unwrap();
            let b = fast_jpads(&cfg, &ch, &params).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.trajectory.len(), 11);
            assert!(a.trajectory.windows(2).all(|w| w[1] <= w[0]));
            assert_eq!(*a.trajectory.last().unwrap(), weighted_psi(&a.best, 0.5).unwrap());
        }
    }

    #[test]
    fn fast_search_finds_two_device_optimum() {
        let cfg = two_device_cfg();
        let ch = gen_channels(&cfg, 5);
        let all = enumerate_feasible(&cfg, &ch).unwrap();
        let psis: Vec<f64> = all.iter().map(|p| weighted_psi(p, 0.5).unwrap()).collect();
        let best = psis.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(psis.iter().filter(|&&v| v == best).count(), 1);
        let hits = (0..100)
            .filter(|&seed| {
                let params = FastJpadsParams { seed, flip_size: 1, ..Default::default() };
                let out = fast_jpads(&cfg, &ch, &params).unwrap();
                *out.trajectory.last().unwrap() == best
            })
            .count();
        assert!(hits >= 99, "converged on {hits} of 100 seeds");
    }

    #[test]
    fn region_extremes() {
        let cfg = default_fig2a();
        let ch = gen_channels(&cfg, 1);
        let single = error_latency_region(&cfg, &ch, &[0.5], 10, 1, 3).unwrap();
        assert_eq!(single.len(), 1);
        assert!(error_latency_region(&cfg, &ch, &[], 10, 1, 3).is_err());
        let ends = error_latency_region(&cfg, &ch, &[0.0, 1.0], 10, 1, 3).unwrap();
        assert!(!ends.is_empty() && ends.len() <= 2);
    }
}
