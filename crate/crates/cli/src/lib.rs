//! Subcommand implementations behind the `emt` binary. Each command returns
//! the process exit code; errors surface as `Err` and map to [`EXIT_ERROR`].

mod plot;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use emt_core::control::fbsm_solve;
use emt_core::scenario_io::{
    parse_scenario_with, read_table, write_results, write_table, ResultTable, RunRecord,
    ScenarioConfig,
};
use emt_core::theorems::{fit_log_slope, gap_series, ideal_and_delivered, run_suite, GapSeries};

pub use plot::{error_plot, line_plot, Series};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

/// Inputs shared by every scenario-driven command.
#[derive(Debug, Clone)]
pub struct RunInput {
    pub scenario: PathBuf,
    pub overrides: Vec<String>,
    pub seed: Option<u64>,
}

struct Loaded {
    text: String,
    cfg: ScenarioConfig,
    overrides: Vec<String>,
}

fn load(input: &RunInput, extra: &[String]) -> Result<Loaded> {
    let text = fs::read_to_string(&input.scenario)
        .with_context(|| format!("cannot read scenario {}", input.scenario.display()))?;
    let mut overrides = input.overrides.clone();
    overrides.extend_from_slice(extra);
    if let Some(seed) = input.seed {
        overrides.push(format!("scenario.seed={seed}"));
    }
    let cfg = parse_scenario_with(&text, &overrides)
        .with_context(|| format!("in {}", input.scenario.display()))?;
    Ok(Loaded {
        text,
        cfg,
        overrides,
    })
}

fn gap_for(cfg: &ScenarioConfig, control: &emt_core::control::ControlPath) -> Result<GapSeries> {
    let problem = cfg.problem();
    let (ideal, delivered) = ideal_and_delivered(&problem, control)?;
    let k: Vec<f64> = cfg.needs.iter().map(|n| n.error_bound).collect();
    Ok(gap_series(
        &ideal,
        &delivered,
        &k,
        cfg.ideation.lambda_decay,
    )?)
}

/// Solves the scenario and writes trajectories, the gap series and a
/// manifest to `out`.
pub fn cmd_solve(input: &RunInput, out: &Path) -> Result<i32> {
    let run = load(input, &[])?;
    let bundle = fbsm_solve(&run.cfg.problem())?;
    let gap = gap_for(&run.cfg, &bundle.control)?;
    write_results(
        out,
        &RunRecord {
            scenario_text: &run.text,
            seed: run.cfg.seed,
            overrides: &run.overrides,
            bundle: Some(&bundle),
            gap: Some(&gap),
            certificates: &[],
        },
    )?;
    if bundle.converged {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "not converged after {} sweeps (last change {:e})",
            bundle.iterations, bundle.final_change
        );
        Ok(EXIT_NOT_CONVERGED)
    }
}

/// Runs the verification suite, prints one line per certificate and writes
/// the report alongside any trajectories the checks produced.
pub fn cmd_verify(input: &RunInput, out: &Path, filter: Option<&str>) -> Result<i32> {
    let run = load(input, &[])?;
    let report = run_suite(&run.cfg, filter)?;
    write_results(
        out,
        &RunRecord {
            scenario_text: &run.text,
            seed: run.cfg.seed,
            overrides: &run.overrides,
            bundle: report.bundle.as_ref(),
            gap: report.gap.as_ref(),
            certificates: &report.certificates,
        },
    )?;
    for c in &report.certificates {
        println!("{} {}", if c.passed { "PASS" } else { "FAIL" }, c.name);
    }
    let failed: Vec<&str> = report
        .certificates
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    if failed.is_empty() {
        Ok(EXIT_OK)
    } else {
        eprintln!("failed checks: {}", failed.join(", "));
        Ok(EXIT_CHECK_FAILED)
    }
}

/// One row of a sweep summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub converged: bool,
    pub utility_integral: f64,
    /// Negated log-slope of the gap over the second half of the horizon;
    /// NaN when the gap has fewer than two positive points there.
    pub fitted_rate: f64,
}

fn fitted_rate(gap: &GapSeries) -> f64 {
    let mid = gap.times.len() / 2;
    let t = &gap.times[mid..];
    let e = &gap.gap[mid..];
    let usable = e.iter().position(|v| *v == 0.0).unwrap_or(e.len());
    fit_log_slope(&t[..usable], &e[..usable]).map_or(f64::NAN, |f| -f.slope)
}

/// Solves once per value of `axis`, at most `jobs` at a time. Each run goes
/// to `out/run_NNN`; `out/summary.csv` collects the rows in input order.
pub fn cmd_sweep(
    input: &RunInput,
    axis: &str,
    values: &[f64],
    out: &Path,
    jobs: usize,
) -> Result<(i32, Vec<SweepRow>)> {
    if values.is_empty() {
        bail!("sweep needs at least one value");
    }
    if !axis.contains('.') {
        bail!("sweep axis must be section.key, got `{axis}`");
    }
    // Validate the axis once before fanning out.
    load(input, &[format!("{axis}={}", values[0])])?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .context("cannot start worker pool")?;
    let rows: Vec<SweepRow> = pool.install(|| {
        values
            .par_iter()
            .enumerate()
            .map(|(k, v)| -> Result<SweepRow> {
                let run = load(input, &[format!("{axis}={v}")])?;
                let bundle = fbsm_solve(&run.cfg.problem())?;
                let gap = gap_for(&run.cfg, &bundle.control)?;
                write_results(
                    &out.join(format!("run_{k:03}")),
                    &RunRecord {
                        scenario_text: &run.text,
                        seed: run.cfg.seed,
                        overrides: &run.overrides,
                        bundle: Some(&bundle),
                        gap: Some(&gap),
                        certificates: &[],
                    },
                )?;
                Ok(SweepRow {
                    value: *v,
                    converged: bundle.converged,
                    utility_integral: bundle.utility_integral,
                    fitted_rate: fitted_rate(&gap),
                })
            })
            .collect::<Result<_>>()
    })?;
    let table = ResultTable {
        header: ["value", "converged", "utility_integral", "fitted_rate"]
            .map(String::from)
            .to_vec(),
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.value,
                    f64::from(u8::from(r.converged)),
                    r.utility_integral,
                    r.fitted_rate,
                ]
            })
            .collect(),
    };
    write_table(&out.join("summary.csv"), &table)?;
    let code = if rows.iter().all(|r| r.converged) {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    };
    Ok((code, rows))
}

/// Parses a comma-separated list of numbers.
pub fn parse_values(csv: &str) -> Result<Vec<f64>> {
    csv.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .with_context(|| format!("`{s}` is not a number"))
        })
        .collect()
}

/// Reads `trajectories.csv` and `gap.csv` from `input` and writes
/// `satisfaction.svg`, `error.svg` and `utility.svg` to `out`.
pub fn cmd_plot(input: &Path, out: &Path) -> Result<i32> {
    let traj = read_table(&input.join("trajectories.csv"))?;
    let gap = read_table(&input.join("gap.csv"))?;
    let t = traj
        .column("t")
        .context("trajectories.csv has no `t` column")?;
    let sats: Vec<Series> = traj
        .columns_with_prefix("x_")
        .into_iter()
        .map(|(name, ys)| Series::new(name, t.clone(), ys))
        .collect();
    if sats.is_empty() {
        bail!("trajectories.csv has no satisfaction columns");
    }
    let utility = traj
        .column("utility")
        .context("trajectories.csv has no `utility` column")?;
    let gt = gap.column("t").context("gap.csv has no `t` column")?;
    let sup = gap
        .column("sup_gap")
        .context("gap.csv has no `sup_gap` column")?;
    let env = gap
        .column("envelope")
        .context("gap.csv has no `envelope` column")?;

    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let files = [
        (
            "satisfaction.svg",
            line_plot("Satisfaction", "t", "x", &sats),
        ),
        (
            "error.svg",
            error_plot(
                "Ideal vs delivered gap",
                &[
                    Series::new("sup_gap", gt.clone(), sup),
                    Series::new("envelope", gt, env),
                ],
            ),
        ),
        (
            "utility.svg",
            line_plot(
                "Discounted utility",
                "t",
                "utility",
                &[Series::new("utility", t, utility)],
            ),
        ),
    ];
    for (name, body) in files {
        let path = out.join(name);
        fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(EXIT_OK)
}
