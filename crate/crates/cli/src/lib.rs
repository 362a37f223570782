//! Command-line front end: `optimize`, `backtest`, `sensitivity`,
//! `export-lp` and `verify`.
//!
//! Exit codes: 0 on success, 1 when `verify` finds a mismatch, 2 for usage,
//! configuration and data errors.

pub mod commands;
pub mod config;
pub mod error;
pub mod svg;
pub mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use riskquad_core::wgrm::zoo::catalog;

pub use commands::{cmd_backtest, cmd_export_lp, cmd_optimize, cmd_sensitivity, cmd_verify, RunOptions};
pub use config::{load, RunConfig};
pub use error::{CliError, Result};
pub use verify::{run_verify, VerifyOptions, VerifyReport};

pub const DEFAULT_SEED: u64 = 2024;

#[derive(Debug, Parser)]
#[command(
    name = "riskquad",
    version,
    about = "Scenario-weighted Expected Shortfall portfolios"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve every analyst and manager program; write weights, objectives and MPS files.
    Optimize(RunArgs),
    /// Backtest each regime; write reports, daily returns and a chart.
    Backtest {
        #[command(flatten)]
        run: RunArgs,
        /// Skip the SVG chart.
        #[arg(long)]
        no_chart: bool,
    },
    /// Run the configured grid, or the table panels when no grid is given.
    Sensitivity(RunArgs),
    /// Check the functional catalog, weight recovery and quadrangle identities.
    Verify(VerifyArgs),
    /// Write the programs as MPS files without solving them.
    ExportLp(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fetch prices over HTTP using the config's `data.fetch` section.
    #[arg(long)]
    pub fetch: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Take the seed from this config when `--seed` is absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Also write `verify.json` here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            config: self.config.clone(),
            out: self.out.clone(),
            fetch: self.fetch,
        }
    }
}

fn verify_seed(args: &VerifyArgs) -> Result<u64> {
    if let Some(s) = args.seed {
        return Ok(s);
    }
    match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            Ok(RunConfig::parse(&text)?.seed.unwrap_or(DEFAULT_SEED))
        }
        None => Ok(DEFAULT_SEED),
    }
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Optimize(a) => cmd_optimize(&a.options()),
        Command::Backtest { run, no_chart } => cmd_backtest(&run.options(), !no_chart),
        Command::Sensitivity(a) => cmd_sensitivity(&a.options()),
        Command::ExportLp(a) => cmd_export_lp(&a.options()),
        Command::Verify(a) => {
            let zoo = catalog().map_err(|e| CliError::Internal(e.to_string()))?;
            let opts = VerifyOptions::new(verify_seed(a)?, a.trials);
            cmd_verify(&zoo, &opts, a.out.as_deref()).map(|_| ())
        }
    }
}

/// Runs a parsed command line, prints any error and returns the exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
