use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use emt_cli::{cmd_plot, cmd_solve, cmd_sweep, cmd_verify, parse_values, RunInput, EXIT_ERROR};

#[derive(Parser)]
#[command(
    name = "emt",
    version,
    about = "Planner solver and verification suite for need-space economies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ScenarioArgs {
    /// Scenario file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Override a scenario value, as in `solver.rho=0.1` or `need.3.weight=2`.
    #[arg(long = "set", value_name = "K=V")]
    overrides: Vec<String>,
    /// Replace the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ScenarioArgs {
    fn input(&self) -> RunInput {
        RunInput {
            scenario: self.scenario.clone(),
            overrides: self.overrides.clone(),
            seed: self.seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the planner problem and write trajectories.
    Solve {
        #[command(flatten)]
        args: ScenarioArgs,
    },
    /// Run the verification suite.
    Verify {
        #[command(flatten)]
        args: ScenarioArgs,
        /// Run checks whose name contains FILTER; `=name` selects one exactly.
        #[arg(long)]
        suite: Option<String>,
    },
    /// Solve once per value of one scenario key.
    Sweep {
        #[command(flatten)]
        args: ScenarioArgs,
        /// Key to vary, as in `ideation.lambda_decay`.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long)]
        values: String,
        /// Maximum concurrent solves.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Draw SVG charts from a solve's output directory.
    Plot {
        /// Directory holding trajectories.csv and gap.csv; defaults to --out.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Solve { args } => cmd_solve(&args.input(), &args.out),
        Command::Verify { args, suite } => cmd_verify(&args.input(), &args.out, suite.as_deref()),
        Command::Sweep {
            args,
            axis,
            values,
            jobs,
        } => {
            let values = parse_values(&values)?;
            let (code, _) = cmd_sweep(&args.input(), &axis, &values, &args.out, jobs)?;
            Ok(code)
        }
        Command::Plot { input, out } => cmd_plot(input.as_ref().unwrap_or(&out), &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
