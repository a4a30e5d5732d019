use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ioisac_core::bench::{sweep, BenchOptions, Scheme, SweepParam, DEFAULT_DWELL, DEFAULT_SINGLE_DEVICE};
use ioisac_core::jpads::{error_latency_region, fast_jpads_with, weighted_psi_scaled, Evaluator, ParetoFront};
use ioisac_core::{gen_channels, optimal_jpads, ChannelSet, FastJpadsParams, ScenarioConfig};

mod output;
mod validate;

use output::{Cell, RunManifest, Table};

#[derive(Parser)]
#[command(name = "ioisac", version, about = "IO-ISAC edge inference simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error-latency trade-off fronts.
    Pareto(ParetoArgs),
    /// Compare schemes over a swept parameter.
    Sweep(SweepArgs),
    /// Objective trajectories of the local search.
    Converge(ConvergeArgs),
    /// Check the solvers against their brute-force references.
    Validate(ValidateArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file, or `fig2a` for the built-in layout.
    #[arg(long, default_value = "fig2a")]
    config: String,
    /// Scenario override, repeatable (e.g. `--set p_sum_mw=30`).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Seed for the randomized algorithms.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Optimal,
    Fast,
    Both,
}

#[derive(Args)]
struct ParetoArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "optimal")]
    algo: Algo,
    /// Weights for the local-search runs.
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1")]
    mu: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    iters: usize,
    #[arg(long, default_value_t = 2)]
    flip: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "psum")]
    param: String,
    #[arg(long, value_delimiter = ',', default_value = "10,30,90")]
    values: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "io-isac,io-isac-2,single,all,sequential")]
    schemes: Vec<String>,
    /// Monte Carlo trials per cell.
    #[arg(long, default_value = "100000")]
    trials: String,
    #[arg(long, default_value_t = 0.5)]
    mu: f64,
    #[arg(long, default_value_t = 0.2)]
    mu_latency: f64,
    #[arg(long, default_value_t = 10)]
    iters: usize,
    #[arg(long, default_value_t = 2)]
    flip: usize,
    /// Sensing dwell of the sequential scheme, seconds.
    #[arg(long, default_value_t = DEFAULT_DWELL)]
    dwell: f64,
    /// One-based device used by the single-device scheme.
    #[arg(long, default_value_t = DEFAULT_SINGLE_DEVICE + 1)]
    device: usize,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    common: Common,
    /// Number of consecutive seeds starting at `--seed`.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    #[arg(long, default_value_t = 0.5)]
    mu: f64,
    #[arg(long, default_value_t = 10)]
    iters: usize,
    #[arg(long, default_value_t = 2)]
    flip: usize,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "100000")]
    trials: String,
    /// Test hook: run every check with an impossible tolerance.
    #[arg(long, hide = true)]
    inject_failure: bool,
}

/// Accepts plain integers and float notation such as `1e6`.
fn parse_count(raw: &str, what: &str) -> Result<u64> {
    if let Ok(v) = raw.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = raw.parse().with_context(|| format!("invalid {what} '{raw}'"))?;
    if v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
        bail!("invalid {what} '{raw}': expected a non-negative integer");
    }
    Ok(v as u64)
}

struct Loaded {
    cfg: ScenarioConfig,
    chans: ChannelSet,
}

fn load(common: &Common) -> Result<Loaded> {
    let cfg = if common.config == "fig2a" {
        ioisac_core::scenario::parse_scenario("", "fig2a", &common.overrides)?
    } else {
        let path = Path::new(&common.config);
        ioisac_core::scenario::load_scenario_with(path, &common.overrides)?
    };
    let chans = gen_channels(&cfg, cfg.seed);
    std::fs::create_dir_all(&common.out)
        .with_context(|| format!("failed to create output directory {}", common.out.display()))?;
    Ok(Loaded { cfg, chans })
}

fn front_rows(table: &mut Table, front: &ParetoFront, algo: &str) {
    for p in &front.points {
        let point = &p.point;
        table.push(vec![
            algo.into(),
            u64::from(point.x.mask()).into(),
            point.x.to_string().into(),
            point.error_lb_comp.into(),
            point.latency_ub.into(),
            point.t_star.into(),
            p.provenance.to_string().into(),
        ]);
    }
}

fn cmd_pareto(args: &ParetoArgs) -> Result<()> {
    let start = Instant::now();
    let Loaded { cfg, chans } = load(&args.common)?;
    let mut table = Table::new(&[
        "algo",
        "x_bitmask",
        "active_set",
        "error_lb",
        "latency_ub_s",
        "t_star",
        "provenance",
    ]);
    if matches!(args.algo, Algo::Optimal | Algo::Both) {
        front_rows(&mut table, &optimal_jpads(&cfg, &chans)?, "optimal");
    }
    if matches!(args.algo, Algo::Fast | Algo::Both) {
        let front = error_latency_region(&cfg, &chans, &args.mu, args.iters, args.flip, args.common.seed)?;
        front_rows(&mut table, &front, "fast");
    }
    let outputs = table.write(&args.common.out, "pareto")?;
    RunManifest::write(
        &args.common.out,
        "pareto",
        &args.common.config,
        &args.common.overrides,
        vec![cfg.seed, args.common.seed],
        &outputs,
        start.elapsed(),
    )?;
    eprintln!("pareto: {} rows written to {}", table.len(), outputs[0].display());
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let start = Instant::now();
    let schemes = args
        .schemes
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<Scheme>())
        .collect::<Result<Vec<_>, _>>()?;
    let param: SweepParam = args.param.parse()?;
    if args.device == 0 {
        bail!("--device is one-based");
    }
    let Loaded { cfg, chans } = load(&args.common)?;
    let opts = BenchOptions {
        mu: args.mu,
        mu_latency: args.mu_latency,
        max_iters: args.iters,
        flip_size: args.flip,
        single_device: args.device - 1,
        dwell: args.dwell,
        trials: parse_count(&args.trials, "trial count")?,
        seed: args.common.seed,
    };
    let result = sweep(&cfg, &chans, &schemes, param, &args.values, &opts)?;
    let mut table = Table::new(&[
        "scheme",
        "parameter",
        "value",
        "x_bitmask",
        "active_set",
        "n_active",
        "accuracy",
        "accuracy_stderr",
        "phi_lb",
        "latency_ub_s",
        "t_star",
        "status",
    ]);
    for row in &result.rows {
        let point = row.point.as_ref();
        table.push(vec![
            row.scheme.name().into(),
            param.name().into(),
            row.value.into(),
            point.map_or(Cell::Empty, |p| u64::from(p.x.mask()).into()),
            point.map_or(Cell::Empty, |p| p.x.to_string().into()),
            point.map_or(Cell::Empty, |p| p.x.count().into()),
            row.accuracy.map(|a| a.mean).into(),
            row.accuracy.map(|a| a.stderr).into(),
            row.phi_lb().into(),
            row.latency_ub().into(),
            point.map(|p| p.t_star).into(),
            row.error.clone().unwrap_or_else(|| "ok".into()).into(),
        ]);
    }
    let outputs = table.write(&args.common.out, "sweep")?;
    RunManifest::write(
        &args.common.out,
        "sweep",
        &args.common.config,
        &args.common.overrides,
        vec![cfg.seed, args.common.seed],
        &outputs,
        start.elapsed(),
    )?;
    eprintln!("sweep: {} rows written to {}", table.len(), outputs[0].display());
    Ok(())
}

fn cmd_converge(args: &ConvergeArgs) -> Result<()> {
    let start = Instant::now();
    if args.iters == 0 {
        bail!("--iters must be at least 1");
    }
    if args.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let Loaded { cfg, chans } = load(&args.common)?;
    let front = optimal_jpads(&cfg, &chans)?;
    let bound = front
        .iter()
        .map(|p| weighted_psi_scaled(p, args.mu, cfg.psi_scale))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let evaluator = Evaluator::new(&cfg, &chans);
    let seeds: Vec<u64> = (0..args.seeds).map(|k| args.common.seed + k).collect();
    let mut table = Table::new(&["seed", "iteration", "psi", "psi_lower_bound", "x_bitmask"]);
    for &seed in &seeds {
        let params = FastJpadsParams {
            mu: args.mu,
            max_iters: args.iters,
            flip_size: args.flip,
            seed,
            ..FastJpadsParams::default()
        }
        .clamped_to(cfg.n_devices());
        let run = fast_jpads_with(&evaluator, &params)?;
        for (k, (psi, x)) in run.trajectory.iter().zip(&run.path).enumerate() {
            table.push(vec![
                seed.into(),
                k.into(),
                (*psi).into(),
                bound.into(),
                u64::from(x.mask()).into(),
            ]);
        }
    }
    let outputs = table.write(&args.common.out, "trace")?;
    let mut all_seeds = vec![cfg.seed];
    all_seeds.extend(&seeds);
    RunManifest::write(
        &args.common.out,
        "converge",
        &args.common.config,
        &args.common.overrides,
        all_seeds,
        &outputs,
        start.elapsed(),
    )?;
    eprintln!("converge: {} seeds written to {}", seeds.len(), outputs[0].display());
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> Result<bool> {
    let start = Instant::now();
    let trials = parse_count(&args.trials, "trial count")?;
    if trials == 0 {
        bail!("--trials must be at least 1");
    }
    let Loaded { cfg, chans } = load(&args.common)?;
    let report = validate::run(&cfg, &chans, trials, args.common.seed, args.inject_failure)?;
    let path = args.common.out.join("validate.json");
    output::write_json(&path, &report)?;
    RunManifest::write(
        &args.common.out,
        "validate",
        &args.common.config,
        &args.common.overrides,
        vec![cfg.seed, args.common.seed],
        std::slice::from_ref(&path),
        start.elapsed(),
    )?;
    for check in &report.checks {
        eprintln!("{:<9} {}: {}", check.status.label(), check.name, check.detail);
    }
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Pareto(a) => cmd_pareto(a).map(|_| true),
        Command::Sweep(a) => cmd_sweep(a).map(|_| true),
        Command::Converge(a) => cmd_converge(a).map(|_| true),
        Command::Validate(a) => cmd_validate(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: validation failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
