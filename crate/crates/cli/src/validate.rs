//! Oracle suite behind the `validate` command.

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use ioisac_core::fusion::{
    fusion_accuracy_exact, max_matching, theta_closed_form, voting_threshold, DiversityMatrix,
};
use ioisac_core::jpads::optimal_jpads;
use ioisac_core::oracle::{brute_matching, fusion_by_enumeration, grid_power_oracle, monte_carlo_accuracy};
use ioisac_core::{solve_p2, Activation, ChannelSet, FusionParams, ScenarioConfig};

const FUSION_TOL: f64 = 1e-12;
const P2_REL_TOL: f64 = 5e-3;
const GRID_POINTS: usize = 200;
const P2_PAIRS: usize = 6;
const RANDOM_GRAPHS: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Informational; never fails the run.
    Reported,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Reported => "REPORTED",
        }
    }

    fn from_ok(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
    pub cases: usize,
    pub worst: f64,
    pub tolerance: f64,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub passed: bool,
    pub trials: u64,
    pub seed: u64,
    pub checks: Vec<Check>,
}

fn fusion_grid() -> Vec<FusionParams> {
    let mut out = Vec::new();
    for pf in [0.01, 0.1, 0.2] {
        for pm in [0.01, 0.1, 0.2] {
            for lambda in [1.0, 2.5, 4.0] {
                out.push(FusionParams::new(pf, pm, lambda));
            }
        }
    }
    out
}

fn check_fusion(tol: f64) -> Result<Check> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for params in fusion_grid() {
        for s in 1..=6 {
            for z in 0..=s {
                let gamma = voting_threshold(s);
                let exact = fusion_accuracy_exact(s, z, &params, gamma)?;
                let brute = fusion_by_enumeration(s, z, &params, gamma)?;
                worst = worst.max((exact - brute).abs());
                cases += 1;
            }
        }
    }
    Ok(Check {
        name: "fusion_exact_vs_enumeration",
        status: Status::from_ok(worst <= tol),
        detail: format!("max |exact - enumeration| = {worst:.3e} over {cases} cases"),
        cases,
        worst,
        tolerance: tol,
    })
}

fn check_p2(cfg: &ScenarioConfig, chans: &ChannelSet, tol: f64) -> Result<Check> {
    let n = cfg.n_devices();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let mut flag_mismatch = 0;
    'outer: for i in 0..n {
        for j in i + 1..n {
            if cases == P2_PAIRS {
                break 'outer;
            }
            let x = Activation::from_indices(&[i, j], n)?;
            let solved = solve_p2(cfg, chans, x);
            let grid = grid_power_oracle(cfg, chans, x, GRID_POINTS);
            match (solved, grid) {
                (Ok(sol), Ok(g)) => worst = worst.max((sol.t_star - g).abs() / sol.t_star),
                (Err(_), Err(_)) => {}
                _ => flag_mismatch += 1,
            }
            cases += 1;
        }
    }
    Ok(Check {
        name: "p2_vs_grid",
        status: Status::from_ok(worst <= tol && flag_mismatch == 0),
        detail: format!("max relative t* gap = {worst:.3e}, feasibility mismatches = {flag_mismatch}"),
        cases,
        worst,
        tolerance: tol,
    })
}

fn random_graph(rng: &mut ChaCha8Rng) -> (usize, Vec<(usize, usize)>) {
    let n = rng.random_range(1..=10);
    let density: f64 = rng.random();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < density {
                edges.push((a, b));
            }
        }
    }
    (n, edges)
}

fn check_matching(seed: u64, tol: f64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..RANDOM_GRAPHS {
        let (n, edges) = random_graph(&mut rng);
        let fast = max_matching(&DiversityMatrix::from_edges(n, &edges));
        let brute = brute_matching(&edges, n)?;
        worst = worst.max((fast as f64 - brute as f64).abs());
    }
    Ok(Check {
        name: "matching_vs_brute_force",
        status: Status::from_ok(worst <= tol),
        detail: format!("max size difference = {worst} over {RANDOM_GRAPHS} random graphs"),
        cases: RANDOM_GRAPHS,
        worst,
        tolerance: tol,
    })
}

fn check_bound(cfg: &ScenarioConfig, chans: &ChannelSet, trials: u64, seed: u64, slack: f64) -> Result<Check> {
    let front = optimal_jpads(cfg, chans)?;
    // most negative (mc - (phi_lb - 3 stderr)) over the front
    let mut worst = f64::INFINITY;
    for p in front.iter() {
        let mc = monte_carlo_accuracy(cfg, chans, p.x, &p.allocation, trials, seed)?;
        worst = worst.min(mc.mean - (p.phi_lb() - 3.0 * mc.stderr));
    }
    Ok(Check {
        name: "phi_lb_vs_monte_carlo",
        status: Status::from_ok(worst >= slack),
        detail: format!(
            "smallest margin of simulated accuracy over phi_lb - 3 stderr = {worst:.3e} across {} front points",
            front.len()
        ),
        cases: front.len(),
        worst,
        tolerance: slack,
    })
}

fn report_closed_form(cfg: &ScenarioConfig) -> Result<Check> {
    let params = cfg.fusion_params();
    let mut worst: f64 = 0.0;
    let mut non_finite = 0;
    let mut cases = 0;
    for s in 1..=6 {
        for z in 0..=s {
            let gamma = voting_threshold(s);
            let exact = fusion_accuracy_exact(s, z, &params, gamma)?;
            let closed = theta_closed_form(s, z, &params, gamma)?;
            if closed.is_finite() {
                worst = worst.max((closed - exact).abs());
            } else {
                non_finite += 1;
            }
            cases += 1;
        }
    }
    Ok(Check {
        name: "closed_form_discrepancy",
        status: Status::Reported,
        detail: format!("max |closed form - exact| = {worst:.3e}, non-finite values = {non_finite}"),
        cases,
        worst,
        tolerance: f64::NAN,
    })
}

/// Runs every check. With `inject_failure` the tolerances are made
/// unsatisfiable so the failure path can be exercised.
pub fn run(cfg: &ScenarioConfig, chans: &ChannelSet, trials: u64, seed: u64, inject_failure: bool) -> Result<Report> {
    let (fusion_tol, p2_tol, match_tol, slack) = if inject_failure {
        (-1.0, -1.0, -1.0, 2.0)
    } else {
        (FUSION_TOL, P2_REL_TOL, 0.0, 0.0)
    };
    let checks = vec![
        check_fusion(fusion_tol)?,
        check_p2(cfg, chans, p2_tol)?,
        check_matching(seed, match_tol)?,
        check_bound(cfg, chans, trials, seed, slack)?,
        report_closed_form(cfg)?,
    ];
    let passed = checks.iter().all(|c| c.status != Status::Fail);
    Ok(Report {
        passed,
        trials,
        seed,
        checks,
    })
}
