//! Max-min uplink SINR power allocation under per-device, total and
//! sensing-quality constraints, for a fixed activation vector.
//!
//! For a target uplink SINR `t` the cheapest allocation is explicit:
//! `p_c(i) = t / gamma_i` and `p_s(i) = beta (sigma_s^2 + sum_j p_c(j)|c_ji|^2) / a_i`.
//! Both grow affinely in `t`, so the largest feasible level is found by
//! bisection on `t` against the two power budgets.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::phy::PhyState;
use crate::scenario::{Activation, ScenarioConfig};

/// Slack allowed on the power budgets.
pub const BUDGET_TOL: f64 = 1e-12;
const REL_TOL: f64 = 1e-9;
const MAX_BISECTIONS: usize = 200;
/// A budget counts as binding when its relative slack is below this.
const BINDING_TOL: f64 = 1e-6;

/// Sensing and uplink transmit powers for every device, W.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub p_s: Vec<f64>,
    pub p_c: Vec<f64>,
}

impl PowerAllocation {
    pub fn zeros(n: usize) -> Self {
        PowerAllocation {
            p_s: vec![0.0; n],
            p_c: vec![0.0; n],
        }
    }

    pub fn total(&self) -> f64 {
        self.p_s.iter().chain(&self.p_c).sum()
    }

    /// Checks non-negativity and both budgets within [`BUDGET_TOL`].
    pub fn within_budgets(&self, p_max: f64, p_sum: f64) -> bool {
        let nonneg = self.p_s.iter().chain(&self.p_c).all(|&p| p >= 0.0);
        let per_device = self
            .p_s
            .iter()
            .zip(&self.p_c)
            .all(|(s, c)| s + c <= p_max + BUDGET_TOL);
        nonneg && per_device && self.total() <= p_sum + BUDGET_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Binding {
    /// Device `i` uses its whole per-device budget.
    Device(usize),
    /// The network-wide budget is exhausted.
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P2Solution {
    pub allocation: PowerAllocation,
    /// Achieved minimum uplink SINR (linear).
    pub t_star: f64,
    pub binding: Vec<Binding>,
}

/// Componentwise-minimal allocation giving every active device uplink SINR `t`
/// while meeting the sensing threshold exactly.
pub fn min_powers_at(t: f64, phy: &PhyState, chans: &ChannelSet, cfg: &ScenarioConfig) -> PowerAllocation {
    let n = chans.n_devices;
    let mut p = PowerAllocation::zeros(n);
    for (slot, &i) in phy.active.iter().enumerate() {
        p.p_c[i] = t / phy.gamma_c[slot];
    }
    for (slot, &i) in phy.active.iter().enumerate() {
        let leak: f64 = phy
            .active
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| p.p_c[j] * chans.c[j][i].norm_sqr())
            .sum();
        p.p_s[i] = cfg.beta * (cfg.noise_sense + leak) / phy.a[slot];
    }
    p
}

fn fits(p: &PowerAllocation, phy: &PhyState, cfg: &ScenarioConfig) -> bool {
    let per_device = phy.active.iter().all(|&i| p.p_s[i] + p.p_c[i] <= cfg.p_max);
    per_device && p.total() <= cfg.p_sum
}

/// Whether uplink level `t` is reachable within the budgets.
pub fn feasible(t: f64, phy: &PhyState, chans: &ChannelSet, cfg: &ScenarioConfig) -> bool {
    fits(&min_powers_at(t, phy, chans, cfg), phy, cfg)
}

fn binding_constraints(p: &PowerAllocation, phy: &PhyState, cfg: &ScenarioConfig) -> Vec<Binding> {
    let mut out: Vec<Binding> = phy
        .active
        .iter()
        .filter(|&&i| cfg.p_max - (p.p_s[i] + p.p_c[i]) <= BINDING_TOL * cfg.p_max)
        .map(|&i| Binding::Device(i))
        .collect();
    if cfg.p_sum - p.total() <= BINDING_TOL * cfg.p_sum {
        out.push(Binding::Sum);
    }
    out
}

/// Solves the inner problem for a precomputed [`PhyState`].
pub fn solve_p2_with(phy: &PhyState, chans: &ChannelSet, cfg: &ScenarioConfig) -> Result<P2Solution> {
    if !feasible(0.0, phy, chans, cfg) {
        return Err(Error::Infeasible {
            mask: phy.activation.mask() as u64,
        });
    }
    let mut hi = phy
        .gamma_c
        .iter()
        .map(|g| cfg.p_max * g)
        .fold(f64::INFINITY, f64::min);
    while feasible(hi, phy, chans, cfg) {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= REL_TOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if feasible(mid, phy, chans, cfg) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let allocation = min_powers_at(lo, phy, chans, cfg);
    let binding = binding_constraints(&allocation, phy, cfg);
    Ok(P2Solution {
        allocation,
        t_star: lo,
        binding,
    })
}

pub fn solve_p2(cfg: &ScenarioConfig, chans: &ChannelSet, x: Activation) -> Result<P2Solution> {
    if x.is_empty() {
        return Err(Error::EmptySet);
    }
    let phy = PhyState::compute(cfg, chans, x)?;
    solve_p2_with(&phy, chans, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::gen_channels;
    use crate::scenario::default_fig2a;
    use approx::assert_relative_eq;

    fn setup(seed: u64, devices: &[usize]) -> (ScenarioConfig, ChannelSet, PhyState) {
        let cfg = default_fig2a();
        let ch = gen_channels(&cfg, seed);
        let x = Activation::from_indices(devices, 8).unwrap();
        let phy = PhyState::compute(&cfg, &ch, x).unwrap();
        (cfg, ch, phy)
    }

    #[test]
    fn zero_level_is_noise_floor() {
        let (cfg, ch, phy) = setup(1, &[2]);
        let p = min_powers_at(0.0, &phy, &ch, &cfg);
        assert_eq!(p.p_c[2], 0.0);
        assert_relative_eq!(p.p_s[2], cfg.beta * cfg.noise_sense / phy.a[0], max_relative = 1e-14);

        let (cfg, ch, phy) = setup(1, &[0, 5]);
        let p = min_powers_at(0.0, &phy, &ch, &cfg);
        assert_eq!((p.p_c[0], p.p_c[5]), (0.0, 0.0));
        assert_relative_eq!(p.p_s[5], cfg.beta * cfg.noise_sense / phy.a[1], max_relative = 1e-14);
    }

    #[test]
    fn minimal_powers_meet_targets_with_equality() {
        let (cfg, ch, phy) = setup(6, &[0, 1]);
        let p = min_powers_at(1.0, &phy, &ch, &cfg);
        let s = phy.sensing_sinr(&cfg, &ch, &p, true);
        let c = phy.comm_sinr(&ch, &p);
        for i in [0, 1] {
            assert_relative_eq!(s[i], cfg.beta, max_relative = 1e-12);
            assert_relative_eq!(c[i], 1.0, max_relative = 1e-12);
        }
        // hand substitution
        let pc1 = 1.0 / phy.gamma_c[1];
        let ps0 = cfg.beta * (cfg.noise_sense + pc1 * ch.c[1][0].norm_sqr()) / phy.a[0];
        assert_relative_eq!(p.p_s[0], ps0, max_relative = 1e-14);
    }

    #[test]
    fn feasibility_has_a_single_boundary() {
        let (cfg, ch, phy) = setup(3, &[0, 1, 4]);
        assert!(feasible(0.0, &phy, &ch, &cfg));
        let huge = cfg.p_max * phy.gamma_c.iter().cloned().fold(f64::INFINITY, f64::min) * 1.01;
        assert!(!feasible(huge, &phy, &ch, &cfg));
        let flags: Vec<bool> = (0..=2000).map(|k| feasible(huge * k as f64 / 2000.0, &phy, &ch, &cfg)).collect();
        let switches = flags.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(switches, 1);
        assert!(flags[0] && !flags[2000]);
    }

    #[test]
    fn single_device_closed_form() {
        let (cfg, ch, phy) = setup(2, &[0]);
        let sol = solve_p2_with(&phy, &ch, &cfg).unwrap();
        let floor = cfg.beta * cfg.noise_sense / phy.a[0];
        let expect = phy.gamma_c[0] * (cfg.p_max - floor).min(cfg.p_sum - floor);
        assert_relative_eq!(sol.t_star, expect, max_relative = 1e-8);
        assert!(!sol.binding.is_empty());
        assert_relative_eq!(sol.allocation.p_s[0] + sol.allocation.p_c[0], cfg.p_max, max_relative = 1e-8);
    }

    #[test]
    fn unreachable_threshold_is_infeasible() {
        let mut cfg = default_fig2a();
        cfg.beta = 1e12;
        let ch = gen_channels(&cfg, 0);
        let x = Activation::single(0, 8).unwrap();
        assert!(matches!(solve_p2(&cfg, &ch, x), Err(Error::Infeasible { .. })));
        assert!(matches!(
            solve_p2(&cfg, &ch, Activation::from_mask(0, 8).unwrap()),
            Err(Error::EmptySet)
        ));
    }

    #[test]
    fn solution_satisfies_all_constraints() {
        let cfg = default_fig2a();
        for seed in 0..10 {
            let ch = gen_channels(&cfg, seed);
            for mask in [0b11u32, 0b1000_0011, 0b1010_0011, 0b0001_0101] {
                let x = Activation::from_mask(mask, 8).unwrap();
                let Ok(sol) = solve_p2(&cfg, &ch, x) else { continue };
                let phy = PhyState::compute(&cfg, &ch, x).unwrap();
                assert!(sol.allocation.within_budgets(cfg.p_max, cfg.p_sum));
                assert!(!sol.binding.is_empty(), "no binding budget at optimum");
                let s = phy.sensing_sinr(&cfg, &ch, &sol.allocation, true);
                let c = phy.comm_sinr(&ch, &sol.allocation);
                for &i in &phy.active {
                    assert!(s[i] >= cfg.beta * (1.0 - 1e-6));
                    assert_relative_eq!(c[i], sol.t_star, max_relative = 1e-6);
                }
            }
        }
    }

    #[test]
    fn optimum_grows_with_budgets() {
        let (mut cfg, ch, _) = setup(4, &[0, 1]);
        let x = Activation::from_indices(&[0, 1], 8).unwrap();
        let mut last = 0.0;
        for p_sum_mw in [5.0, 10.0, 20.0, 40.0, 60.0, 90.0] {
            cfg.p_sum = p_sum_mw * 1e-3;
            let t = solve_p2(&cfg, &ch, x).map(|s| s.t_star).unwrap_or(0.0);
            assert!(t >= last * (1.0 - 1e-9));
            last = t;
        }
        let mut last = 0.0;
        for p_max_mw in [5.0, 10.0, 20.0, 30.0, 60.0] {
            cfg.p_max = p_max_mw * 1e-3;
            let t = solve_p2(&cfg, &ch, x).map(|s| s.t_star).unwrap_or(0.0);
            assert!(t >= last * (1.0 - 1e-9));
            last = t;
        }
    }
}
