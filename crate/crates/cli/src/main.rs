//! Command-line front end: solve for optimal allocations, simulate policies
//! and trace the length-regret frontier.

mod commands;
mod config;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<adaptexp::Error> for CliError {
    fn from(e: adaptexp::Error) -> Self {
        use adaptexp::Error::*;
        match e {
            InvalidParameter(_) | IndexOutOfRange { .. } | Unsupported(_) | Config(_) => {
                CliError::Config(e.to_string())
            }
            Ordering(_) | Precondition(_) | OutOfRange(_) | Numerical(_) => CliError::Numeric(e.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "adaptexp", version, about = "Cost-aware adaptive experimentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for the optimal allocation of the configured instance and costs.
    Solve(Common),
    /// Run Monte Carlo trials of the configured policy.
    Simulate(Common),
    /// Trace normalized length and regret over a grid of best-arm shares.
    Frontier(Common),
    /// Run built-in numerical checks.
    Selftest,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Base seed; overrides `[run] seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of trials; overrides `[run] trials`.
    #[arg(long)]
    trials: Option<u64>,
    /// Worker threads for simulation (results do not depend on it).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(c) => commands::solve(c),
        Command::Simulate(c) => commands::simulate(c),
        Command::Frontier(c) => commands::frontier(c),
        Command::Selftest => selftest::run(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("adaptexp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
