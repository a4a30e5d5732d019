//! Baseline schemes and parameter sweeps.
//!
//! Schemes compared against the optimized system:
//!
//! * `single`: one fixed device, powers from the inner solver.
//! * `all`: every device active with an equal power split. The inner solver
//!   is usually infeasible here because cross-device leakage stops the
//!   sensing threshold from being met, so devices that miss it simply vote
//!   as degraded.
//! * `sequential`: the optimized activation and powers, but sensing and
//!   upload take turns. Sensing sees no uplink leakage and the latency pays
//!   an extra sensing dwell.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::fusion::sinr_qualified;
use crate::jpads::{fast_jpads_with, EvalPoint, Evaluator, FastJpadsParams};
use crate::oracle::{monte_carlo_with_flags, McEstimate};
use crate::palloc::PowerAllocation;
use crate::scenario::{db_to_linear, mw_to_watts, Activation, ScenarioConfig};

pub const DEFAULT_DWELL: f64 = 0.05;
/// Device 6 of the reference layout.
pub const DEFAULT_SINGLE_DEVICE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    IoIsac,
    /// Same optimizer with more weight on latency.
    IoIsacLatency,
    Single,
    All,
    Sequential,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::IoIsac,
        Scheme::IoIsacLatency,
        Scheme::Single,
        Scheme::All,
        Scheme::Sequential,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::IoIsac => "io-isac",
            Scheme::IoIsacLatency => "io-isac-2",
            Scheme::Single => "single",
            Scheme::All => "all",
            Scheme::Sequential => "sequential",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|scheme| scheme.name() == s.trim())
            .ok_or_else(|| {
                Error::Parse {
                    origin: "scheme".into(),
                    message: format!(
                        "unknown scheme '{s}' (expected one of io-isac, io-isac-2, single, all, sequential)"
                    ),
                }
            })
    }
}

/// Swept scenario parameter. Values are given in the units of the scenario
/// file: mW for the budgets, dB for beta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepParam {
    Psum,
    Pmax,
    Lambda,
    Beta,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Psum => "psum",
            SweepParam::Pmax => "pmax",
            SweepParam::Lambda => "lambda",
            SweepParam::Beta => "beta",
        }
    }

    /// Copy of `cfg` with the parameter set to `value`, validated.
    pub fn apply(self, cfg: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut out = cfg.clone();
        match self {
            SweepParam::Psum => out.p_sum = mw_to_watts(value),
            SweepParam::Pmax => out.p_max = mw_to_watts(value),
            SweepParam::Lambda => out.lambda = value,
            SweepParam::Beta => out.beta = db_to_linear(value),
        }
        out.validate()?;
        Ok(out)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "psum" | "p_sum" => Ok(SweepParam::Psum),
            "pmax" | "p_max" => Ok(SweepParam::Pmax),
            "lambda" => Ok(SweepParam::Lambda),
            "beta" => Ok(SweepParam::Beta),
            _ => Err(Error::Parse {
                origin: "param".into(),
                message: format!("unknown sweep parameter '{s}' (expected psum, pmax, lambda or beta)"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchOptions {
    pub mu: f64,
    pub mu_latency: f64,
    pub max_iters: usize,
    pub flip_size: usize,
    pub single_device: usize,
    pub dwell: f64,
    /// Monte Carlo trials per cell; 0 skips the simulation.
    pub trials: u64,
    pub seed: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            mu: 0.5,
            mu_latency: 0.2,
            max_iters: 10,
            flip_size: 2,
            single_device: DEFAULT_SINGLE_DEVICE,
            dwell: DEFAULT_DWELL,
            trials: 100_000,
            seed: 0,
        }
    }
}

pub fn scheme_single_device(cfg: &ScenarioConfig, chans: &ChannelSet, device: usize) -> Result<EvalPoint> {
    let x = Activation::single(device, cfg.n_devices())?;
    Evaluator::new(cfg, chans).evaluate(x)
}

/// Equal split `p_s = p_c = min(p_max, p_sum / N) / 2` on every device.
pub fn equal_split(cfg: &ScenarioConfig) -> PowerAllocation {
    let n = cfg.n_devices();
    let each = cfg.p_max.min(cfg.p_sum / n as f64) / 2.0;
    PowerAllocation {
        p_s: vec![each; n],
        p_c: vec![each; n],
    }
}

pub fn scheme_all_devices(cfg: &ScenarioConfig, chans: &ChannelSet) -> Result<EvalPoint> {
    all_devices_with(&Evaluator::new(cfg, chans))
}

fn all_devices_with(evaluator: &Evaluator<'_>) -> Result<EvalPoint> {
    let cfg = evaluator.config();
    let x = Activation::all(cfg.n_devices());
    let probe = evaluator.score(x, equal_split(cfg), 0.0, true)?;
    let t_star = x
        .active()
        .iter()
        .map(|&i| probe.comm_sinr[i])
        .fold(f64::INFINITY, f64::min);
    Ok(EvalPoint { t_star, ..probe })
}

/// Re-times an optimized point for a sense-then-upload schedule.
pub fn sequential_from(evaluator: &Evaluator<'_>, point: &EvalPoint, dwell: f64) -> Result<EvalPoint> {
    if !(dwell >= 0.0) {
        return Err(Error::Domain(format!("sensing dwell must be non-negative, got {dwell}")));
    }
    let mut out = evaluator.score(point.x, point.allocation.clone(), point.t_star, false)?;
    out.latency.xi_ub = dwell + out.latency.t_comm + out.latency.t_comp;
    out.latency_ub = out.latency.xi_ub;
    Ok(out)
}

pub fn scheme_sequential_edge(
    cfg: &ScenarioConfig,
    chans: &ChannelSet,
    dwell: f64,
    params: &FastJpadsParams,
) -> Result<EvalPoint> {
    let evaluator = Evaluator::new(cfg, chans);
    let point = fast_jpads_with(&evaluator, params)?.best;
    sequential_from(&evaluator, &point, dwell)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub value: f64,
    /// Present when the cell was solved.
    pub point: Option<EvalPoint>,
    pub accuracy: Option<McEstimate>,
    /// Error message for cells that could not be solved.
    pub error: Option<String>,
}

impl SweepRow {
    pub fn phi_lb(&self) -> Option<f64> {
        self.point.as_ref().map(EvalPoint::phi_lb)
    }

    pub fn latency_ub(&self) -> Option<f64> {
        self.point.as_ref().map(|p| p.latency_ub)
    }

    pub fn active_count(&self) -> Option<usize> {
        self.point.as_ref().map(|p| p.x.count())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub parameter: SweepParam,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, scheme: Scheme, value: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.scheme == scheme && r.value == value)
    }
}

fn solve_cell(cfg: &ScenarioConfig, chans: &ChannelSet, scheme: Scheme, opts: &BenchOptions) -> Result<EvalPoint> {
    let evaluator = Evaluator::new(cfg, chans);
    let fast = |mu: f64| {
        let params = FastJpadsParams {
            mu,
            max_iters: opts.max_iters,
            flip_size: opts.flip_size,
            seed: opts.seed,
            ..FastJpadsParams::default()
        }
        .clamped_to(cfg.n_devices());
        fast_jpads_with(&evaluator, &params).map(|o| o.best)
    };
    match scheme {
        Scheme::IoIsac => fast(opts.mu),
        Scheme::IoIsacLatency => fast(opts.mu_latency),
        Scheme::Single => evaluator.evaluate(Activation::single(opts.single_device, cfg.n_devices())?),
        Scheme::All => all_devices_with(&evaluator),
        Scheme::Sequential => sequential_from(&evaluator, &fast(opts.mu)?, opts.dwell),
    }
}

/// Simulated accuracy of an evaluated point, using its own sensing SINRs.
pub fn point_accuracy(cfg: &ScenarioConfig, point: &EvalPoint, trials: u64, seed: u64) -> Result<McEstimate> {
    let flags: Vec<bool> = point
        .x
        .active()
        .iter()
        .map(|&i| sinr_qualified(point.sensing_sinr[i], cfg.beta))
        .collect();
    monte_carlo_with_flags(cfg, point.x, &flags, trials, seed)
}

/// Evaluates every (scheme, value) cell. Rows are ordered by scheme, then by
/// value, in the order given. A cell that cannot be solved keeps its error
/// message and the sweep continues.
pub fn sweep(
    cfg: &ScenarioConfig,
    chans: &ChannelSet,
    schemes: &[Scheme],
    parameter: SweepParam,
    values: &[f64],
    opts: &BenchOptions,
) -> Result<SweepResult> {
    if values.is_empty() && !schemes.is_empty() {
        return Err(Error::Domain("sweep needs at least one value".into()));
    }
    let configs = values
        .iter()
        .map(|&v| parameter.apply(cfg, v))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(Scheme, usize)> = schemes
        .iter()
        .flat_map(|&s| (0..values.len()).map(move |k| (s, k)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(scheme, k)| {
            let cell_cfg = &configs[k];
            let (point, error) = match solve_cell(cell_cfg, chans, scheme, opts) {
                Ok(p) => (Some(p), None),
                Err(e) => (None, Some(e.to_string())),
            };
            let accuracy = match (&point, opts.trials) {
                (Some(p), trials) if trials > 0 => Some(point_accuracy(cell_cfg, p, trials, opts.seed)?),
                _ => None,
            };
            Ok(SweepRow {
                scheme,
                value: values[k],
                point,
                accuracy,
                error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { parameter, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::gen_channels;
    use crate::jpads::evaluate;
    use crate::scenario::default_fig2a;
    use approx::assert_relative_eq;

    #[test]
    fn names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("fastest".parse::<Scheme>().is_err());
        assert_eq!("P_SUM".parse::<SweepParam>().unwrap(), SweepParam::Psum);
        assert!("gain".parse::<SweepParam>().is_err());
    }

    #[test]
    fn parameter_units() {
        let cfg = default_fig2a();
        assert_relative_eq!(SweepParam::Psum.apply(&cfg, 30.0).unwrap().p_sum, 0.03);
        assert_relative_eq!(SweepParam::Beta.apply(&cfg, 20.0).unwrap().beta, 100.0, max_relative = 1e-12);
        assert!(SweepParam::Lambda.apply(&cfg, 20.0).is_err());
    }

    #[test]
    fn single_matches_direct_evaluation() {
        let cfg = default_fig2a();
        let ch = gen_channels(&cfg, 1);
        let a = scheme_single_device(&cfg, &ch, 5).unwrap();
        let b = evaluate(&cfg, &ch, Activation::single(5, 8).unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.z, 0);
        assert!(scheme_single_device(&cfg, &ch, 8).is_err());
    }

    #[test]
    fn equal_split_respects_budgets() {
        let mut cfg = default_fig2a();
        for p_sum in [0.001, 0.09, 1.0] {
            cfg.p_sum = p_sum;
            let p = equal_split(&cfg);
            assert!(p.within_budgets(cfg.p_max, cfg.p_sum));
        }
    }

    #[test]
    fn sequential_adds_dwell() {
        let cfg = default_fig2a();
        let ch = gen_channels(&cfg, 1);
        let evaluator = Evaluator::new(&cfg, &ch);
        let base = evaluator.evaluate(Activation::from_indices(&[0, 1], 8).unwrap()).unwrap();
        let zero = sequential_from(&evaluator, &base, 0.0).unwrap();
        assert_relative_eq!(zero.latency_ub, base.latency_ub, max_relative = 1e-12);
        assert!(zero.error_lb_comp <= base.error_lb_comp);
        let later = sequential_from(&evaluator, &base, 0.1).unwrap();
        assert_relative_eq!(later.latency_ub - base.latency_ub, 0.1, max_relative = 1e-9);
        assert!(sequential_from(&evaluator, &base, -1.0).is_err());
    }

    #[test]
    fn sweep_shape_and_failures() {
        let cfg = default_fig2a();
        let ch = gen_channels(&cfg, 1);
        let opts = BenchOptions { trials: 2_000, ..Default::default() };
        let empty = sweep(&cfg, &ch, &[], SweepParam::Psum, &[10.0], &opts).unwrap();
        assert!(empty.rows.is_empty());
        let res = sweep(&cfg, &ch, &[Scheme::IoIsac, Scheme::Single], SweepParam::Psum, &[10.0, 30.0, 90.0], &opts).unwrap();
        assert_eq!(res.rows.len(), 6);
        for row in &res.rows {
            if let Some(acc) = row.accuracy {
                assert!(acc.stderr > 0.0);
            }
        }
        // an impossible threshold is recorded per cell
        let res = sweep(&cfg, &ch, &[Scheme::Single], SweepParam::Beta, &[120.0], &opts).unwrap();
        assert!(res.rows[0].point.is_none() && res.rows[0].error.is_some());
    }

    #[test]
    fn unit_lambda_makes_quality_irrelevant() {
        let cfg = default_fig2a();
        let ch = gen_channels(&cfg, 1);
        let opts = BenchOptions { trials: 20_000, ..Default::default() };
        let res = sweep(&cfg, &ch, &[Scheme::IoIsac], SweepParam::Lambda, &[1.0], &opts).unwrap();
        let row = &res.rows[0];
        let point = row.point.as_ref().unwrap();
        let cell = SweepParam::Lambda.apply(&cfg, 1.0).unwrap();
        let forced: Vec<bool> = vec![false; point.x.count()];
        let degraded = monte_carlo_with_flags(&cell, point.x, &forced, 20_000, opts.seed).unwrap();
        assert_eq!(row.accuracy.unwrap().mean, degraded.mean);
    }
}
