//! Decision-fusion accuracy model.
//!
//! Each active device reports a binary decision. A device is *qualified* when
//! its sensing SINR reaches `beta` and its aspect angle satisfies
//! `|cos xi| >= alpha`; otherwise its false-alarm and miss probabilities are
//! inflated by `lambda`. The server declares "abnormal" when at least `gamma`
//! devices do. Device errors are independent, so the vote count under either
//! hypothesis is the sum of two binomial groups.

mod matching;

use std::f64::consts::PI;

pub use matching::{matching_size, maximum_matching};

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::palloc::PowerAllocation;
use crate::phy::PhyState;
use crate::scenario::{pairwise_angle, Activation, FusionParams, ScenarioConfig};

/// Relative slack when comparing a sensing SINR against `beta`; solutions of
/// the power-allocation problem sit exactly on the threshold.
pub const SINR_REL_TOL: f64 = 1e-9;

/// Absolute slack on the inclusive [pi/3, 2pi/3] diversity window.
pub const WINDOW_TOL: f64 = 1e-12;

pub fn sinr_qualified(sinr: f64, beta: f64) -> bool {
    sinr >= beta * (1.0 - SINR_REL_TOL)
}

/// Voting threshold `max(1, floor(|S|/2))`.
pub fn voting_threshold(s_size: usize) -> usize {
    (s_size / 2).max(1)
}

/// Effective (false-alarm, miss) probabilities of one device.
pub fn effective_probs(qualified: bool, params: &FusionParams) -> (f64, f64) {
    if qualified {
        (params.p_f, params.p_m)
    } else {
        (params.lambda * params.p_f, params.lambda * params.p_m)
    }
}

/// Per-device qualification flags and effective error probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityProfile {
    pub devices: Vec<usize>,
    pub qualified: Vec<bool>,
    pub false_alarm: Vec<f64>,
    pub miss: Vec<f64>,
}

impl QualityProfile {
    pub fn new(devices: Vec<usize>, qualified: Vec<bool>, params: &FusionParams) -> Self {
        assert_eq!(devices.len(), qualified.len());
        let (false_alarm, miss) = qualified.iter().map(|&q| effective_probs(q, params)).unzip();
        QualityProfile {
            devices,
            qualified,
            false_alarm,
            miss,
        }
    }
}

/// Accuracy of a single device.
pub fn single_device_accuracy(qualified: bool, params: &FusionParams) -> f64 {
    let (pf, pm) = effective_probs(qualified, params);
    params.prior_h0 * (1.0 - pf) + params.prior_h1 * (1.0 - pm)
}

/// Distribution of the number of successes among independent Bernoulli
/// trials split into two homogeneous groups.
fn two_group_pmf(n_a: usize, p_a: f64, n_b: usize, p_b: f64) -> Vec<f64> {
    let mut pmf = vec![1.0];
    let trials = std::iter::repeat_n(p_a, n_a).chain(std::iter::repeat_n(p_b, n_b));
    for p in trials {
        let mut next = vec![0.0; pmf.len() + 1];
        for (k, &mass) in pmf.iter().enumerate() {
            next[k] += mass * (1.0 - p);
            next[k + 1] += mass * p;
        }
        pmf = next;
    }
    pmf
}

fn check_vote_args(s_size: usize, z: usize, gamma: usize) -> Result<()> {
    if s_size == 0 {
        return Err(Error::EmptySet);
    }
    if z > s_size {
        return Err(Error::Domain(format!("qualified count {z} exceeds |S| = {s_size}")));
    }
    if gamma == 0 || gamma > s_size {
        return Err(Error::Domain(format!("voting threshold {gamma} outside 1..={s_size}")));
    }
    Ok(())
}

/// Exact fused accuracy with `z` qualified and `s_size - z` degraded devices.
pub fn fusion_accuracy_exact(s_size: usize, z: usize, params: &FusionParams, gamma: usize) -> Result<f64> {
    check_vote_args(s_size, z, gamma)?;
    let degraded = s_size - z;
    let (pf_q, pm_q) = effective_probs(true, params);
    let (pf_d, pm_d) = effective_probs(false, params);
    // number of "abnormal" votes
    let under_h0 = two_group_pmf(z, pf_q, degraded, pf_d);
    let under_h1 = two_group_pmf(z, 1.0 - pm_q, degraded, 1.0 - pm_d);
    let correct_h0: f64 = under_h0[..gamma].iter().sum();
    let correct_h1: f64 = under_h1[gamma..].iter().sum();
    Ok((params.prior_h0 * correct_h0 + params.prior_h1 * correct_h1).clamp(0.0, 1.0))
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn pow_signed(base: f64, exp: i64) -> f64 {
    base.powi(exp as i32)
}

/// Closed-form accuracy expression with fixed summation limits.
///
/// Its exponents are not consistent with the voting model (the H1 product can
/// carry negative powers of `p_f`), so this is only used to report
/// discrepancies against [`fusion_accuracy_exact`].
pub fn theta_closed_form(s_size: usize, z: usize, params: &FusionParams, gamma: usize) -> Result<f64> {
    check_vote_args(s_size, z, gamma)?;
    let (pf, pm, lam) = (params.p_f, params.p_m, params.lambda);
    let s = s_size as i64;
    let zz = z as i64;
    let inner = |n: i64, term: &dyn Fn(i64) -> f64| -> f64 {
        let k1 = 0.max(n - s + zz);
        let k2 = zz.min(n);
        (k1..=k2)
            .map(|k| binomial(z, k as usize) * binomial(s_size - z, (n - k) as usize) * term(k))
            .sum()
    };
    let mut h0 = 0.0;
    for n in gamma as i64..=s {
        let p1 = |k: i64| {
            pow_signed(1.0 - pf, k)
                * pow_signed(1.0 - lam * pf, n - k)
                * pow_signed(pm, zz - k)
                * pow_signed(lam * pm, s - zz - n + k)
        };
        h0 += inner(n, &p1);
    }
    let mut h1 = 0.0;
    for n in (s - gamma as i64 + 1)..=s {
        let p2 = |k: i64| {
            pow_signed(1.0 - pm, k)
                * pow_signed(1.0 - lam * pm, n - k)
                * pow_signed(pf, s - zz - k)
                * pow_signed(lam * pf, s - zz - n + k)
        };
        h1 += inner(n, &p2);
    }
    Ok(params.prior_h0 * h0 + params.prior_h1 * h1)
}

/// Antisymmetric {-1, 0, +1} matrix marking device pairs whose intersection
/// angle at the target lies in [pi/3, 2pi/3].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiversityMatrix {
    /// Device index of each row.
    pub devices: Vec<usize>,
    pub t: Vec<Vec<i8>>,
}

impl DiversityMatrix {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut t = vec![vec![0i8; n]; n];
        for &(a, b) in edges {
            if a == b {
                continue;
            }
            let (lo, hi) = (a.min(b), a.max(b));
            t[lo][hi] = 1;
            t[hi][lo] = -1;
        }
        DiversityMatrix {
            devices: (0..n).collect(),
            t,
        }
    }

    pub fn len(&self) -> usize {
        self.devices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.devices.is_empty()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.t[i][j] != 0)
            .collect()
    }
}

pub fn in_diversity_window(theta: f64) -> bool {
    (PI / 3.0 - WINDOW_TOL..=2.0 * PI / 3.0 + WINDOW_TOL).contains(&theta)
}

pub fn build_diversity_matrix(cfg: &ScenarioConfig, qualified: &[usize]) -> Result<DiversityMatrix> {
    let mut devices = qualified.to_vec();
    devices.sort_unstable();
    devices.dedup();
    let n = devices.len();
    let mut t = vec![vec![0i8; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let theta = pairwise_angle(cfg, devices[a], devices[b])?;
            if in_diversity_window(theta) {
                t[a][b] = 1;
                t[b][a] = -1;
            }
        }
    }
    Ok(DiversityMatrix { devices, t })
}

/// Size of a maximum matching of the graph with edges where `T_ij != 0`.
pub fn max_matching(t: &DiversityMatrix) -> usize {
    matching_size(t.len(), &t.edges())
}

/// Half the rank of `T` (exact, by fraction-free elimination).
pub fn rank_half(t: &DiversityMatrix) -> usize {
    let mut m: Vec<Vec<i128>> = t.t.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    integer_rank(&mut m) / 2
}

/// Bareiss elimination; exact for integer matrices.
fn integer_rank(m: &mut [Vec<i128>]) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    let mut prev = 1i128;
    for col in 0..cols {
        let Some(pivot) = (rank..rows).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(rank, pivot);
        for r in rank + 1..rows {
            for c in col + 1..cols {
                m[r][c] = (m[r][c] * m[rank][col] - m[r][col] * m[rank][c]) / prev;
            }
            m[r][col] = 0;
        }
        prev = m[rank][col];
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// Ingredients of the accuracy lower bound for one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBound {
    pub phi_lb: f64,
    /// Active devices meeting the sensing threshold.
    pub qualified: Vec<usize>,
    /// Guaranteed number of angle-qualified devices.
    pub z: usize,
    pub gamma: usize,
}

/// Lower bound from already-computed sensing SINRs (indexed by device).
pub fn phi_lb_from_sinr(cfg: &ScenarioConfig, x: Activation, sensing_sinr: &[f64]) -> Result<LowerBound> {
    let active = x.active();
    if active.is_empty() {
        return Err(Error::EmptySet);
    }
    let qualified: Vec<usize> = active
        .iter()
        .copied()
        .filter(|&i| sinr_qualified(sensing_sinr[i], cfg.beta))
        .collect();
    let t = build_diversity_matrix(cfg, &qualified)?;
    let z = max_matching(&t);
    let gamma = voting_threshold(active.len());
    let phi_lb = fusion_accuracy_exact(active.len(), z, &cfg.fusion_params(), gamma)?;
    Ok(LowerBound {
        phi_lb,
        qualified,
        z,
        gamma,
    })
}

pub fn phi_lb_with(phy: &PhyState, cfg: &ScenarioConfig, chans: &ChannelSet, p: &PowerAllocation) -> Result<LowerBound> {
    let sinr = phy.sensing_sinr(cfg, chans, p, true);
    phi_lb_from_sinr(cfg, phy.activation, &sinr)
}

/// Motion-independent lower bound on the fused accuracy.
pub fn phi_lb(cfg: &ScenarioConfig, chans: &ChannelSet, x: Activation, p: &PowerAllocation) -> Result<f64> {
    let phy = PhyState::compute(cfg, chans, x)?;
    Ok(phi_lb_with(&phy, cfg, chans, p)?.phi_lb)
}
