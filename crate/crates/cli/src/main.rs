//! `shiftlab`: batch experiments on shift spaces with exact reports.
//!
//! Exit codes: 0 verified, 1 verification failed, 2 usage or parse error,
//! 3 violated precondition, 4 horizon exhausted.

mod commands;
mod config;
mod exit;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "shiftlab", version, about = "Exact shadowing experiments on shift spaces")]
struct Cli {
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default `shiftlab-out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config horizon.
    #[arg(long, global = true)]
    horizon: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact distance from the first point file to each of the others.
    Metric {
        #[arg(required = true, num_args = 2..)]
        points: Vec<PathBuf>,
    },
    /// Shadowing-set decay curves for two finite sets.
    Hyper { a: PathBuf, b: PathBuf },
    /// Sampled contraction deadlines per space.
    Uniformity,
    /// Witnesses against uniform contraction.
    Counterexample,
    /// Shadow a pseudo-orbit built from jumps.
    Shadow,
}

fn run(cli: Cli) -> Result<bool, exit::Failure> {
    let mut cfg = ExperimentConfig::load(cli.config.as_deref())?;
    let out_given = cli.out.is_some() || cfg.out.is_some();
    if let Some(out) = cli.out {
        cfg.out = Some(out);
    }
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.horizon.is_some() {
        cfg.horizon = cli.horizon;
    }
    match &cli.command {
        Command::Metric { points } => commands::metric(&cfg, out_given, points),
        Command::Hyper { a, b } => commands::hyper(&cfg, a, b),
        Command::Uniformity => commands::uniformity(&cfg),
        Command::Counterexample => commands::counterexample(&cfg),
        Command::Shadow => commands::shadow(&cfg),
    }
}

fn main() -> ExitCode {
    exit::code(run(Cli::parse()))
}
