#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;

use clap::{Args, Parser, Subcommand};
use config::{ExperimentConfig, Overrides};
use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

/// Abel time-transformation experiments for linear systems with a
/// time-varying delay.
///
/// Exit codes: 0 success, 1 usage or config error, 2 assumption or
/// admissibility failure, 3 numerical failure.
#[derive(Parser, Debug)]
#[command(name = "abel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Overrides `horizon`.
    #[arg(long)]
    horizon: Option<f64>,
    /// Overrides `grid_n`.
    #[arg(long)]
    grid_n: Option<usize>,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check tau > 0 and tau' < 1 on [0, horizon].
    ValidateDelay(Common),
    /// Check the seed against the admissible-set conditions.
    CheckSeed(Common),
    /// Trace h, h' and the Abel residual over [0, horizon].
    Transform(Common),
    /// Trace every seed in `seeds` and rank them by max h'.
    Compare(Common),
    /// Integrate the varying- and fixed-delay systems and compare them.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also run at dt/2 and dt/4 and report the observed order.
        #[arg(long)]
        halving: bool,
    },
    /// Search for the Legendre parameter minimizing max h'.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Overrides `search.seed_rng`.
        #[arg(long)]
        seed_rng: Option<u64>,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    cfg.apply(&Overrides {
        horizon: common.horizon,
        grid_n: common.grid_n,
        out: common.out.clone(),
    });
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::ValidateDelay(c) => commands::validate(&load(c)?),
        Command::CheckSeed(c) => commands::check_seed(&load(c)?),
        Command::Transform(c) => commands::transform(&load(c)?),
        Command::Compare(c) => commands::compare(&load(c)?),
        Command::Simulate { common, halving } => commands::simulate(&load(common)?, *halving),
        Command::Optimize { common, seed_rng } => commands::optimize(&load(common)?, *seed_rng),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
