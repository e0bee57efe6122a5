//! Acceptance gate. Each criterion prints one `PASS`/`FAIL` line with the
//! measured quantity next to its pinned limit; the test fails if any line
//! reads `FAIL`. Runs without the libtest harness so the lines always print.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use emt_cli::{cmd_verify, RunInput, EXIT_OK};
use emt_core::control::{
    dh_dcontrol, fbsm_solve, hamiltonian, integrate_backward, ControlGradient, CostateMode,
    CostateValue, PlannerProblem, TrajectoryBundle,
};
use emt_core::economy::ControlValue;
use emt_core::needspace::{utility_gap_bound, ExperientialState, WeightVector};
use emt_core::scenario_io::{parse_scenario, ScenarioConfig, SplitMix64};
use emt_core::theorems::{
    attainable_levels, find_pareto_improvement, frontier_supremum_series, ideal_and_delivered,
    lq_problem, meaning_suprema, pareto_family, rollback_utility, FrontierState,
};

// Pinned limits.
const RATE_REL_TOL: f64 = 0.05;
const ENVELOPE_ABS_TOL: f64 = 1e-12;
const HOLDER_ABS_TOL: f64 = 1e-12;
const HOLDER_DRAWS: usize = 1000;
const GRADIENT_REL_TOL: f64 = 1e-6;
const GRADIENT_DRAWS: usize = 100;
const FD_STEP: f64 = 1e-5;
const STATIONARITY_TOL_FACTOR: f64 = 10.0;
const ORACLE_ABS_TOL: f64 = 1e-4;
const HORIZON_REL_TOL: f64 = 1e-3;
const COSTATE_REL_TOL: f64 = 1e-6;
const LITERAL_MIN_DEVIATION: f64 = 1e-2;
const PARETO_FAMILY: usize = 200;
const EXACT_TOL: f64 = 1e-12;
const LABOR_GRID: usize = 10;
const LIMIT_CONVERGENCE: Duration = Duration::from_secs(5);
const LIMIT_PARETO: Duration = Duration::from_secs(10);
const LIMIT_FULL_SUITE: Duration = Duration::from_secs(60);
const SEED: u64 = 0x5eed_acce;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn demo_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/demo.scn")
}

fn demo() -> ScenarioConfig {
    parse_scenario(&fs::read_to_string(demo_path()).unwrap()).unwrap()
}

fn sup(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |m, x| m.max(x.abs()))
}

/// Ordinary least squares slope of `y` on `x`.
fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn convergence(cfg: &ScenarioConfig) -> Outcome {
    let start = Instant::now();
    let problem = cfg.problem();
    let bundle = fbsm_solve(&problem).unwrap();
    let (ideal, delivered) = ideal_and_delivered(&problem, &bundle.control).unwrap();
    let lambda = cfg.ideation.lambda_decay;
    let k_star = cfg.needs.iter().map(|n| n.error_bound).fold(0.0, f64::max);
    let times = ideal.series.times();
    let gaps: Vec<f64> = ideal
        .series
        .rows()
        .zip(delivered.series.rows())
        .map(|(a, b)| sup(a.iter().zip(b).map(|(p, q)| p - q)))
        .collect();
    let excess = times
        .iter()
        .zip(&gaps)
        .map(|(t, g)| g - k_star * (-lambda * t).exp())
        .fold(f64::NEG_INFINITY, f64::max);
    let half = cfg.solver.horizon / 2.0;
    let (tt, lg): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(&gaps)
        .filter(|(t, g)| **t >= half && **g > 0.0)
        .map(|(t, g)| (*t, g.ln()))
        .unzip();
    let slope = ols_slope(&tt, &lg);
    let rel = (slope + lambda).abs() / lambda;
    let elapsed = start.elapsed();
    outcome(
        cfg.dim() == 16
            && bundle.converged
            && excess <= ENVELOPE_ABS_TOL
            && rel <= RATE_REL_TOL
            && elapsed < LIMIT_CONVERGENCE,
        format!(
            "N={} envelope excess {excess:.3e} <= {ENVELOPE_ABS_TOL:e}; slope {slope:.6} vs -{lambda} \
             (rel {rel:.2e} <= {RATE_REL_TOL}); {:.2}s < {}s",
            cfg.dim(),
            elapsed.as_secs_f64(),
            LIMIT_CONVERGENCE.as_secs()
        ),
    )
}

fn holder_excess(w: &[f64], x: &[f64], xh: &[f64]) -> f64 {
    let lhs = w
        .iter()
        .zip(x)
        .zip(xh)
        .map(|((a, p), q)| a * (p - q))
        .sum::<f64>()
        .abs();
    let rhs = w.iter().sum::<f64>() * sup(x.iter().zip(xh).map(|(p, q)| p - q));
    lhs - rhs
}

fn holder(cfg: &ScenarioConfig, bundle: &TrajectoryBundle) -> Outcome {
    let mut rng = SplitMix64::new(SEED);
    let n = cfg.dim();
    let mut worst = f64::NEG_INFINITY;
    let mut library_disagrees = 0usize;
    for _ in 0..HOLDER_DRAWS {
        let w: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, 3.0)).collect();
        let x: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, cfg.sat_max)).collect();
        let xh: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, cfg.sat_max)).collect();
        worst = worst.max(holder_excess(&w, &x, &xh));
        let g = utility_gap_bound(
            &WeightVector::new(w).unwrap(),
            &ExperientialState::new(0.0, x, cfg.sat_max).unwrap(),
            &ExperientialState::new(0.0, xh, cfg.sat_max).unwrap(),
        )
        .unwrap();
        if !g.holds || g.gap > g.bound + HOLDER_ABS_TOL {
            library_disagrees += 1;
        }
    }
    let problem = cfg.problem();
    let w: Vec<f64> = cfg.needs.iter().map(|n| n.weight).collect();
    let (ideal, delivered) = ideal_and_delivered(&problem, &bundle.control).unwrap();
    let mut traj_worst = f64::NEG_INFINITY;
    for k in 0..ideal.series.len() {
        traj_worst = traj_worst.max(holder_excess(
            &w,
            ideal.series.row(k),
            delivered.series.row(k),
        ));
        traj_worst = traj_worst.max(holder_excess(
            &w,
            bundle.state.series.row(k),
            ideal.series.row(k),
        ));
    }
    outcome(
        worst <= HOLDER_ABS_TOL && traj_worst <= HOLDER_ABS_TOL && library_disagrees == 0,
        format!(
            "{HOLDER_DRAWS} random triples excess {worst:.3e}, trajectories excess {traj_worst:.3e} \
             <= {HOLDER_ABS_TOL:e}; library violations {library_disagrees}"
        ),
    )
}

fn nudged(c: &ControlValue, i: usize, h: f64) -> ControlValue {
    let mut v = c.as_slice().to_vec();
    v[i] += h;
    ControlValue::Allocation(v)
}

fn pontryagin(cfg: &ScenarioConfig, bundle: &TrajectoryBundle) -> Outcome {
    let p: PlannerProblem = cfg.problem();
    let n = p.dim();
    let mut rng = SplitMix64::new(SEED ^ 0x9e37);
    let mut worst = 0.0_f64;
    let mut used = 0usize;
    for _ in 0..GRADIENT_DRAWS {
        let t = rng.uniform(0.0, p.solver.horizon);
        let x: Vec<f64> = p
            .needs
            .iter()
            .map(|nd| rng.uniform(0.0, nd.desired))
            .collect();
        let lam: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, 1.0)).collect();
        let y = ControlValue::Allocation(
            (0..n)
                .map(|_| rng.uniform(0.1, 1.0) * p.solver.y_max / n as f64)
                .collect(),
        );
        let ControlGradient::Smooth(g) = dh_dcontrol(&x, &y, &lam, t, &p).unwrap() else {
            continue;
        };
        let c = CostateValue::present(lam);
        let fd: Vec<f64> = (0..n)
            .map(|i| {
                let up = hamiltonian(&x, &nudged(&y, i, FD_STEP), &c, t, &p).unwrap();
                let dn = hamiltonian(&x, &nudged(&y, i, -FD_STEP), &c, t, &p).unwrap();
                (up - dn) / (2.0 * FD_STEP)
            })
            .collect();
        let scale = sup(g.iter().copied());
        if scale > 0.0 {
            worst = worst.max(sup(g.iter().zip(&fd).map(|(a, b)| a - b)) / scale);
            used += 1;
        }
    }
    let limit = STATIONARITY_TOL_FACTOR * p.solver.tol;
    let residual = bundle
        .hamiltonian_residual
        .iter()
        .copied()
        .fold(0.0, f64::max);
    outcome(
        used == GRADIENT_DRAWS && worst <= GRADIENT_REL_TOL && bundle.converged && residual < limit,
        format!(
            "gradient rel error {worst:.3e} <= {GRADIENT_REL_TOL:e} on {used}/{GRADIENT_DRAWS} states; \
             stationarity residual {residual:.3e} < {limit:e}"
        ),
    )
}

fn doubled(p: &PlannerProblem) -> PlannerProblem {
    let mut q = p.clone();
    q.solver.horizon *= 2.0;
    q.solver.steps *= 2;
    q
}

fn single_need_oracle() -> Outcome {
    let p = lq_problem();
    let b = fbsm_solve(&p).unwrap();
    let n = &p.needs[0];
    let (eta, y) = (1.0, p.solver.y_max);
    let mu_star = n.weight / (p.solver.rho + n.delta);
    let x_star = n.effectiveness * (1.0 - (-eta * y).exp()) / n.delta;
    let mid = p.solver.steps / 2;
    let dx = (b.state.series.row(mid)[0] - x_star).abs();
    let dmu = (b.costate.series.row(mid)[0] - mu_star).abs();
    let long = fbsm_solve(&doubled(&p)).unwrap();
    let change = (long.utility_integral - b.utility_integral).abs() / b.utility_integral.abs();
    outcome(
        b.converged
            && long.converged
            && dx <= ORACLE_ABS_TOL
            && dmu <= ORACLE_ABS_TOL
            && change < HORIZON_REL_TOL,
        format!(
            "|x-x*| {dx:.3e}, |mu-mu*| {dmu:.3e} <= {ORACLE_ABS_TOL:e} at t={}; \
             doubling T moves utility by {:.4}% < {}%",
            p.solver.horizon / 2.0,
            100.0 * change,
            100.0 * HORIZON_REL_TOL
        ),
    )
}

fn costate_modes(cfg: &ScenarioConfig, current: &TrajectoryBundle) -> Outcome {
    let p = cfg.problem();
    let rho = p.solver.rho;
    let present = fbsm_solve(&p.with_costate_mode(CostateMode::PresentValue)).unwrap();
    let mut worst = 0.0_f64;
    for (k, t) in current.times().iter().enumerate() {
        for (mu, lam) in current
            .costate
            .series
            .row(k)
            .iter()
            .zip(present.costate.series.row(k))
        {
            let d = (mu - (rho * t).exp() * lam).abs();
            worst = worst.max(if mu.abs() > 0.0 { d / mu.abs() } else { d });
        }
    }
    let literal = integrate_backward(
        &p,
        CostateMode::PaperLiteral,
        &vec![0.0; p.dim()],
        &current.state,
    )
    .unwrap();
    let mut deviation = 0.0_f64;
    for (k, t) in current.times().iter().enumerate() {
        for (mu, lam) in current
            .costate
            .series
            .row(k)
            .iter()
            .zip(literal.series.row(k))
        {
            if mu.abs() > 1e-9 {
                deviation = deviation.max(((rho * t).exp() * lam - mu).abs() / mu.abs());
            }
        }
    }
    outcome(
        present.converged && worst <= COSTATE_REL_TOL && deviation > LITERAL_MIN_DEVIATION,
        format!(
            "|mu - e^(rho t) lambda|/|mu| {worst:.3e} <= {COSTATE_REL_TOL:e}; \
             literal co-state deviation {deviation:.3e} > {LITERAL_MIN_DEVIATION:e} (expected divergence)"
        ),
    )
}

fn pareto() -> Outcome {
    let start = Instant::now();
    let (mut found, mut mismatches, mut bad) = (0usize, 0usize, 0usize);
    for (cfg, x) in pareto_family(SEED, PARETO_FAMILY) {
        let premise = cfg.factors.labor_idle > 0.0
            && cfg
                .needs
                .iter()
                .zip(x.sat())
                .any(|(n, xi)| n.ethics_mask && *xi < n.desired);
        let got = find_pareto_improvement(&cfg, &x).unwrap();
        if got.is_some() != premise {
            mismatches += 1;
        }
        if let Some(imp) = got {
            found += 1;
            let du: f64 = cfg
                .needs
                .iter()
                .zip(imp.after.iter().zip(&imp.before))
                .map(|(n, (a, b))| n.weight * (a - b))
                .sum();
            let lowered = imp.after.iter().zip(&imp.before).any(|(a, b)| a < b);
            if lowered
                || imp.delta_u.is_nan()
                || imp.delta_u <= 0.0
                || (du - imp.delta_u).abs() > EXACT_TOL
            {
                bad += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && bad == 0 && found > 0 && elapsed < LIMIT_PARETO,
        format!(
            "{PARETO_FAMILY} economies, {found} improvements, {mismatches} premise mismatches, \
             {bad} invalid improvements; {:.2}s < {}s",
            elapsed.as_secs_f64(),
            LIMIT_PARETO.as_secs()
        ),
    )
}

fn structure(cfg: &ScenarioConfig) -> Outcome {
    let w: Vec<f64> = cfg.needs.iter().map(|n| n.weight).collect();
    let wv = WeightVector::new(w.clone()).unwrap();
    let levels = attainable_levels(&cfg.needs, cfg.share, cfg.solver.y_max, cfg.sat_max);
    let base = ExperientialState::new(0.0, levels, cfg.sat_max).unwrap();
    let adds = &cfg
        .frontier
        .as_ref()
        .expect("demo has a frontier schedule")
        .adds;
    let series = frontier_supremum_series(&base, &wv, adds).unwrap();
    let mut frontier_err = 0.0_f64;
    let mut frontier_strict = true;
    for (j, a) in adds.iter().enumerate() {
        let inc = series[j + 1] - series[j];
        frontier_err = frontier_err.max((inc - a.weight * a.attainable).abs());
        frontier_strict &= !(a.weight > 0.0 && a.attainable > 0.0) || inc > 0.0;
    }

    let mut rng = SplitMix64::new(SEED ^ 0x7011);
    let mut rollback_err = 0.0_f64;
    let mut rollback_strict = true;
    for _ in 0..100 {
        let x: Vec<f64> = (0..w.len())
            .map(|_| rng.uniform(0.01, cfg.sat_max))
            .collect();
        let dims: Vec<usize> = (0..w.len()).filter(|_| rng.bernoulli(0.3)).collect();
        let removed: f64 = dims.iter().map(|&i| w[i] * x[i]).sum();
        let state = ExperientialState::new(0.0, x, cfg.sat_max).unwrap();
        let r = rollback_utility(&wv, &state, &dims).unwrap();
        rollback_err = rollback_err.max((r.before - r.after - removed).abs());
        rollback_strict &= dims.is_empty() || r.after < r.before;
    }

    let m = cfg.meaning_index.expect("demo has a meaning need");
    let (full, suppressed) = meaning_suprema(&w, m, cfg.sat_max).unwrap();
    let meaning_err = (full - suppressed - w[m] * cfg.sat_max).abs();

    outcome(
        frontier_strict
            && rollback_strict
            && full > suppressed
            && frontier_err <= EXACT_TOL
            && rollback_err <= EXACT_TOL
            && meaning_err <= EXACT_TOL,
        format!(
            "frontier {} adds, accounting {frontier_err:.1e}; rollback accounting {rollback_err:.1e}; \
             meaning shortfall accounting {meaning_err:.1e}; all <= {EXACT_TOL:e}",
            adds.len()
        ),
    )
}

fn discovery(cfg: &ScenarioConfig) -> Outcome {
    let f = cfg.frontier.as_ref().expect("demo has a frontier schedule");
    let state = FrontierState::new(cfg.dim(), f.discovery_slope).unwrap();
    let gains: Vec<f64> = (0..LABOR_GRID)
        .map(|k| {
            let labor = f.human_labor * k as f64 / (LABOR_GRID - 1) as f64;
            state
                .discover(labor, f.new_weight, f.new_attainable, 1.0)
                .unwrap()
                .delta_u
        })
        .collect();
    let increasing = gains.windows(2).all(|p| p[1] > p[0]);
    outcome(
        f.discovery_slope > 0.0 && f.new_weight > 0.0 && gains[0] == 0.0 && increasing,
        format!(
            "delta_U at L_h=0 is {}; strictly increasing over {LABOR_GRID} labor levels up to {} (last {:.4})",
            gains[0],
            f.human_labor,
            gains[LABOR_GRID - 1]
        ),
    )
}

fn dir_listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

/// Runs the full suite twice; returns the determinism and full-suite outcomes.
fn verify_twice() -> (Outcome, Outcome) {
    let input = RunInput {
        scenario: demo_path(),
        overrides: Vec::new(),
        seed: None,
    };
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let start = Instant::now();
    let first = cmd_verify(&input, dirs[0].path(), None).unwrap();
    let elapsed = start.elapsed();
    let second = cmd_verify(&input, dirs[1].path(), None).unwrap();
    let (a, b) = (dir_listing(dirs[0].path()), dir_listing(dirs[1].path()));
    let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
    let determinism = outcome(
        !a.is_empty() && a == b,
        format!(
            "{} files byte-identical across two runs: {}",
            names.len(),
            names.join(", ")
        ),
    );
    let full = outcome(
        first == EXIT_OK && second == EXIT_OK && elapsed < LIMIT_FULL_SUITE,
        format!(
            "exit {first}; {:.2}s < {}s",
            elapsed.as_secs_f64(),
            LIMIT_FULL_SUITE.as_secs()
        ),
    );
    (determinism, full)
}

fn main() {
    let cfg = demo();
    let bundle = fbsm_solve(&cfg.problem()).unwrap();
    let (determinism, full_suite) = verify_twice();
    let results = [
        ("1 convergence envelope and rate", convergence(&cfg)),
        ("2 Holder utility bound", holder(&cfg, &bundle)),
        ("3 Pontryagin consistency", pontryagin(&cfg, &bundle)),
        ("4 single-need oracle and horizon", single_need_oracle()),
        ("5 co-state mode equivalence", costate_modes(&cfg, &bundle)),
        ("6 Pareto improvement from idle labor", pareto()),
        (
            "7 frontier, rollback and meaning accounting",
            structure(&cfg),
        ),
        ("8 discovery value of human labor", discovery(&cfg)),
        ("9 deterministic verify output", determinism),
        ("10 full suite on the demo scenario", full_suite),
    ];
    let mut failed = Vec::new();
    for (name, o) in &results {
        println!(
            "{} criterion {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.passed {
            failed.push(*name);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
