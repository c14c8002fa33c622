//! Command-line experiment runner for the secure-sensing simulator.
//!
//! Exit codes: 0 success, 1 configuration error, 2 infeasible
//! optimization, 3 internal invariant violation.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Infeasible(String),
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Infeasible(m) | CliError::Internal(m) => m,
        }
    }
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Path to the TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config file's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to all cores. Results do not depend on
    /// the thread count.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Parser, Debug)]
#[command(name = "sqrs", version, about = "Secure quantum remote sensing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run protocol executions and export transcripts, a posterior and a
    /// summary.
    Simulate(CommonArgs),
    /// Export eavesdropper-dispersion lower-bound maps over (P_S, P_F).
    SecurityMap(CommonArgs),
    /// Search for the best protocol probabilities under the security
    /// constraint.
    Optimize(CommonArgs),
    /// Export Fisher information and Cramér–Rao tables.
    Fisher(CommonArgs),
    /// Emit the data series behind one of the comparison figures.
    Figure {
        #[command(flatten)]
        common: CommonArgs,
        /// Figure id (2-6).
        #[arg(long)]
        id: u8,
    },
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    let (common, figure_id) = match &cli.command {
        Command::Simulate(c)
        | Command::SecurityMap(c)
        | Command::Optimize(c)
        | Command::Fisher(c) => (c, None),
        Command::Figure { common, id } => (common, Some(*id)),
    };

    if let Some(threads) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot configure thread pool: {e}")))?;
    }

    let cfg = ExperimentConfig::load(&common.config)?;
    let seed = common.seed.unwrap_or(cfg.seed);
    let out = common.out.clone();

    match (&cli.command, figure_id) {
        (Command::Simulate(_), _) => commands::simulate(&cfg, seed, &out),
        (Command::SecurityMap(_), _) => commands::security_map(&cfg, seed, &out),
        (Command::Optimize(_), _) => commands::optimize(&cfg, seed, &out),
        (Command::Fisher(_), _) => commands::fisher(&cfg, seed, &out),
        (Command::Figure { .. }, Some(id)) => commands::figure(&cfg, seed, &out, id),
        (Command::Figure { .. }, None) => unreachable!(),
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}
