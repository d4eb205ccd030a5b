//! `friendrep`: batch front end for graph and session generation, replica
//! availability simulation, the analytic model and trace fitting.
//!
//! Exit codes: 0 success, 1 config error, 2 input-data error, 3 internal
//! error.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::Config;
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "friendrep", version, about)]
struct Cli {
    /// Experiment configuration (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed, overrides `experiment.seed`
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory, overrides `experiment.out_dir`
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Worker threads (default: all cores); results do not depend on it
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a friendship graph; writes graph.txt, degree_stats.csv, degree_ccdf.csv
    Graph,
    /// Generate online sessions for every node; writes sessions.csv
    Sessions,
    /// Measure replica availability; writes results.csv, cdf.csv, summary.csv
    Simulate,
    /// Analytic degree sweep and Monte-Carlo traces; writes sweep.csv, trace_*.csv
    Analytic,
    /// Fit a Weibull distribution to session durations; writes fit.csv
    Fit {
        /// Files with one duration in seconds per line
        samples: Vec<PathBuf>,
    },
    /// Rebuild cdf.csv and summary.csv from a results file
    Report {
        /// Per-user results (default: <out_dir>/results.csv)
        #[arg(long)]
        results: Option<PathBuf>,
        /// Per-day results to add daily CDFs
        #[arg(long)]
        daily: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        config.experiment.seed = seed;
    }
    if let Some(dir) = cli.out_dir {
        config.experiment.out_dir = Some(dir);
    }
    if let Some(n) = cli.threads.or(config.experiment.threads) {
        if n == 0 {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    }
    let ctx = Context::new(config);
    match &cli.command {
        Command::Graph => commands::graph(&ctx),
        Command::Sessions => commands::sessions(&ctx),
        Command::Simulate => commands::simulate(&ctx),
        Command::Analytic => commands::analytic(&ctx),
        Command::Fit { samples } => commands::fit(&ctx, samples),
        Command::Report { results, daily } => {
            commands::report(&ctx, results.as_deref(), daily.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage mistakes count as configuration errors.
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("friendrep: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
