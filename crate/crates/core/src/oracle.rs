//! Brute-force references for checking the fast paths.
//!
//! Nothing here reuses the helper that computes the quantity being checked:
//! the Monte Carlo simulator applies the voting rule itself, the power grid
//! recomputes the sensing powers from the channels, and the matching search
//! enumerates edge subsets directly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::palloc::PowerAllocation;
use crate::phy::PhyState;
use crate::scenario::{aspect_cos_at, Activation, FusionParams, ScenarioConfig};

/// Trials per random stream. Each chunk draws from its own ChaCha stream so
/// the estimate does not depend on how chunks are scheduled.
const MC_CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
    pub seed: u64,
}

impl McEstimate {
    fn from_counts(correct: u64, trials: u64, seed: u64) -> Self {
        let mean = correct as f64 / trials as f64;
        McEstimate {
            mean,
            stderr: (mean * (1.0 - mean) / trials as f64).sqrt(),
            trials,
            seed,
        }
    }
}

/// Simulated fused accuracy of `x` under allocation `p`.
///
/// Each trial draws the hypothesis and a uniform motion direction, marks
/// every active device qualified when its sensing SINR reaches beta and its
/// aspect cosine reaches alpha, draws the local decisions and applies the
/// half-voting rule.
pub fn monte_carlo_accuracy(
    cfg: &ScenarioConfig,
    chans: &ChannelSet,
    x: Activation,
    p: &PowerAllocation,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    if x.is_empty() {
        return Err(Error::EmptySet);
    }
    let phy = PhyState::compute(cfg, chans, x)?;
    let sinr = phy.sensing_sinr(cfg, chans, p, true);
    let sinr_ok: Vec<bool> = x.active().iter().map(|&i| sinr[i] >= cfg.beta * (1.0 - 1e-9)).collect();
    monte_carlo_with_flags(cfg, x, &sinr_ok, trials, seed)
}

/// Same simulation with the SINR test already decided per active device
/// (`sinr_ok[k]` refers to the k-th active device).
pub fn monte_carlo_with_flags(
    cfg: &ScenarioConfig,
    x: Activation,
    sinr_ok: &[bool],
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    let active = x.active();
    if active.is_empty() {
        return Err(Error::EmptySet);
    }
    if trials == 0 {
        return Err(Error::Domain("Monte Carlo needs at least one trial".into()));
    }
    if sinr_ok.len() != active.len() {
        return Err(Error::Dimension(format!(
            "{} SINR flags for {} active devices",
            sinr_ok.len(),
            active.len()
        )));
    }
    let positions = active
        .iter()
        .map(|&i| cfg.device(i))
        .collect::<Result<Vec<_>>>()?;
    let params = cfg.fusion_params();
    let gamma = (active.len() / 2).max(1);

    let chunks = trials.div_ceil(MC_CHUNK);
    let correct: u64 = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let n = MC_CHUNK.min(trials - chunk * MC_CHUNK);
            let mut hits = 0u64;
            for _ in 0..n {
                let h1 = rng.random::<f64>() < params.prior_h1;
                let dir = rng.random::<f64>() * std::f64::consts::TAU;
                let mut votes = 0usize;
                for (k, &pos) in positions.iter().enumerate() {
                    let good = sinr_ok[k] && aspect_cos_at(pos, cfg.target_position, dir) >= cfg.alpha;
                    let scale = if good { 1.0 } else { params.lambda };
                    let p_one = if h1 { 1.0 - scale * params.p_m } else { scale * params.p_f };
                    if rng.random::<f64>() < p_one {
                        votes += 1;
                    }
                }
                if (votes >= gamma) == h1 {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    Ok(McEstimate::from_counts(correct, trials, seed))
}

/// Accuracy of `z` qualified and `s_size - z` degraded voters by listing all
/// `2^s_size` decision vectors under each hypothesis.
pub fn fusion_by_enumeration(s_size: usize, z: usize, params: &FusionParams, gamma: usize) -> Result<f64> {
    if s_size == 0 || z > s_size || s_size > 24 {
        return Err(Error::Domain(format!("enumeration needs 0 <= z <= |S| <= 24, got z={z}, |S|={s_size}")));
    }
    let mut correct_h0 = 0.0;
    let mut correct_h1 = 0.0;
    for outcome in 0u32..(1u32 << s_size) {
        let mut prob_h0 = 1.0;
        let mut prob_h1 = 1.0;
        for k in 0..s_size {
            let scale = if k < z { 1.0 } else { params.lambda };
            let pf = scale * params.p_f;
            let pm = scale * params.p_m;
            if outcome >> k & 1 == 1 {
                prob_h0 *= pf;
                prob_h1 *= 1.0 - pm;
            } else {
                prob_h0 *= 1.0 - pf;
                prob_h1 *= pm;
            }
        }
        if (outcome.count_ones() as usize) < gamma {
            correct_h0 += prob_h0;
        } else {
            correct_h1 += prob_h1;
        }
    }
    Ok(params.prior_h0 * correct_h0 + params.prior_h1 * correct_h1)
}

/// Best minimum uplink SINR found by searching the uplink powers of the
/// active devices on a grid, with the sensing powers set to the smallest
/// values meeting beta.
///
/// The first stage covers `[0, p_max]` in each coordinate. Each later stage
/// re-grids a window a tenth as wide centred on the incumbent, so the final
/// step is far below `p_max / grid_points`. The window keeps a margin of
/// `grid_points / 20` cells because the incumbent can sit on a wide plateau
/// (every coarse cell ties at zero when one device needs less than one step).
pub fn grid_power_oracle(cfg: &ScenarioConfig, chans: &ChannelSet, x: Activation, grid_points: usize) -> Result<f64> {
    const STAGES: usize = 10;
    let active = x.active();
    if active.is_empty() {
        return Err(Error::EmptySet);
    }
    if active.len() > 3 {
        return Err(Error::SizeLimit(format!("grid search over {} devices (at most 3)", active.len())));
    }
    if grid_points < 2 {
        return Err(Error::Domain("grid needs at least two points per axis".into()));
    }
    let phy = PhyState::compute(cfg, chans, x)?;
    let m = active.len();

    // min SINR at uplink powers `pc`, or None when a budget is violated
    let score = |pc: &[f64]| -> Option<f64> {
        let mut total = 0.0;
        let mut worst = f64::INFINITY;
        for k in 0..m {
            let i = active[k];
            let mut interference = cfg.noise_sense;
            for l in 0..m {
                if l != k {
                    interference += pc[l] * chans.c[active[l]][i].norm_sqr();
                }
            }
            let ps = cfg.beta * interference / phy.a[k];
            if ps + pc[k] > cfg.p_max {
                return None;
            }
            total += ps + pc[k];
            worst = worst.min(pc[k] * phy.gamma_c[k]);
        }
        (total <= cfg.p_sum).then_some(worst)
    };

    let mut lo = vec![0.0; m];
    let mut hi = vec![cfg.p_max; m];
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..STAGES {
        let steps: Vec<f64> = (0..m).map(|k| (hi[k] - lo[k]) / (grid_points - 1) as f64).collect();
        let cells = grid_points.pow(m as u32);
        let stage_best = (0..cells)
            .into_par_iter()
            .filter_map(|cell| {
                let mut rest = cell;
                let mut pc = vec![0.0; m];
                for k in 0..m {
                    pc[k] = lo[k] + (rest % grid_points) as f64 * steps[k];
                    rest /= grid_points;
                }
                score(&pc).map(|v| (v, cell, pc))
            })
            // ties broken by cell index so the result is schedule independent
            .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
        let Some((value, _, pc)) = stage_best else {
            break;
        };
        if best.as_ref().is_none_or(|(v, _)| value >= *v) {
            best = Some((value, pc.clone()));
        }
        let centre = &best.as_ref().expect("set above").1;
        let margin = (grid_points / 20).max(2) as f64;
        for k in 0..m {
            lo[k] = (centre[k] - margin * steps[k]).max(0.0);
            hi[k] = (centre[k] + margin * steps[k]).min(cfg.p_max);
        }
    }
    best.map(|(v, _)| v).ok_or(Error::Infeasible { mask: x.mask() as u64 })
}

/// Maximum matching size by trying every set of pairwise disjoint edges.
pub fn brute_matching(edges: &[(usize, usize)], n_nodes: usize) -> Result<usize> {
    if n_nodes > 16 {
        return Err(Error::SizeLimit(format!("brute-force matching on {n_nodes} nodes (at most 16)")));
    }
    if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| a >= n_nodes || b >= n_nodes) {
        return Err(Error::Index {
            index: a.max(b),
            len: n_nodes,
        });
    }
    let edges: Vec<(usize, usize)> = edges.iter().copied().filter(|(a, b)| a != b).collect();

    fn search(edges: &[(usize, usize)], used: u32) -> usize {
        let Some((&(a, b), rest)) = edges.split_first() else {
            return 0;
        };
        let skip = search(rest, used);
        if used >> a & 1 == 0 && used >> b & 1 == 0 {
            skip.max(1 + search(rest, used | 1 << a | 1 << b))
        } else {
            skip
        }
    }
    Ok(search(&edges, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::gen_channels;
    use crate::palloc::solve_p2;
    use crate::scenario::default_fig2a;
    use approx::assert_relative_eq;

    #[test]
    fn stderr_formula() {
        let e = McEstimate::from_counts(900, 1000, 0);
        assert_relative_eq!(e.stderr, (0.9f64 * 0.1 / 1000.0).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn error_free_devices_are_always_right() {
        let mut cfg = default_fig2a();
        cfg.p_f = 0.0;
        cfg.p_m = 0.0;
        let x = Activation::from_indices(&[0, 3, 5], 8).unwrap();
        let e = monte_carlo_with_flags(&cfg, x, &[true, false, true], 10_000, 4).unwrap();
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn single_qualified_device_matches_closed_form() {
        let mut cfg = default_fig2a();
        cfg.alpha = 1e-300;
        let x = Activation::single(2, 8).unwrap();
        let e = monte_carlo_with_flags(&cfg, x, &[true], 1_000_000, 11).unwrap();
        assert!((e.mean - 0.9).abs() <= 3.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn simulation_is_reproducible_and_seed_sensitive() {
        let cfg = default_fig2a();
        let x = Activation::from_indices(&[0, 1, 5, 7], 8).unwrap();
        let flags = [true, true, false, true];
        let a = monte_carlo_with_flags(&cfg, x, &flags, 100_000, 9).unwrap();
        let b = monte_carlo_with_flags(&cfg, x, &flags, 100_000, 9).unwrap();
        let c = monte_carlo_with_flags(&cfg, x, &flags, 100_000, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.mean, c.mean);
        assert!(monte_carlo_with_flags(&cfg, x, &flags, 0, 9).is_err());
        assert!(monte_carlo_with_flags(&cfg, x, &flags[..2], 10, 9).is_err());
    }

    #[test]
    fn enumeration_small_cases() {
        let params = FusionParams::new(0.1, 0.1, 3.0);
        assert_relative_eq!(fusion_by_enumeration(1, 1, &params, 1).unwrap(), 0.9, epsilon = 1e-15);
        assert_relative_eq!(fusion_by_enumeration(1, 0, &params, 1).unwrap(), 0.7, epsilon = 1e-15);
        assert_relative_eq!(fusion_by_enumeration(2, 2, &params, 1).unwrap(), 0.9, epsilon = 1e-15);
        assert!(fusion_by_enumeration(2, 3, &params, 1).is_err());
    }

    #[test]
    fn brute_matching_cases() {
        assert_eq!(brute_matching(&[(0, 1), (1, 2), (2, 0)], 3).unwrap(), 1);
        assert_eq!(brute_matching(&[(0, 1), (2, 3)], 4).unwrap(), 2);
        assert_eq!(brute_matching(&[], 0).unwrap(), 0);
        assert!(matches!(brute_matching(&[], 17), Err(Error::SizeLimit(_))));
        assert!(matches!(brute_matching(&[(0, 5)], 4), Err(Error::Index { .. })));
    }

    #[test]
    fn grid_agrees_with_bisection_for_one_device() {
        let cfg = default_fig2a();
        let ch = gen_channels(&cfg, 1);
        let x = Activation::single(4, 8).unwrap();
        let t = solve_p2(&cfg, &ch, x).unwrap().t_star;
        let g = grid_power_oracle(&cfg, &ch, x, 200).unwrap();
        assert!(g <= t * (1.0 + 1e-9));
        assert!((t - g) / t < 1e-3, "{g} vs {t}");
        assert!(grid_power_oracle(&cfg, &ch, Activation::from_mask(0b1111, 8).unwrap(), 10).is_err());
        let mut strict = cfg.clone();
        strict.beta = 1e12;
        assert!(matches!(grid_power_oracle(&strict, &ch, x, 50), Err(Error::Infeasible { .. })));
    }
}
