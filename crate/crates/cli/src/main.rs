//! `mest`: config-driven simulation, fitting, experiment suites and
//! diagnostics for distributional regression models.
//!
//! Exit codes are a stable contract:
//! 0 success, 2 config or data error, 3 degenerate fit, 4 experiment
//! threshold failure, 5 diagnostic failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliErrorKind {
    Config,
    Data,
    Degenerate,
    Threshold,
    CheckFailed,
    Io,
}

#[derive(Debug)]
pub struct CliError {
    kind: CliErrorKind,
    message: String,
}

impl CliError {
    pub fn config(message: String) -> Self {
        Self {
            kind: CliErrorKind::Config,
            message,
        }
    }
    pub fn data(message: String) -> Self {
        Self {
            kind: CliErrorKind::Data,
            message,
        }
    }
    pub fn data_from(e: impl std::fmt::Display) -> Self {
        Self::data(e.to_string())
    }
    pub fn degenerate(message: String) -> Self {
        Self {
            kind: CliErrorKind::Degenerate,
            message,
        }
    }
    pub fn threshold(message: String) -> Self {
        Self {
            kind: CliErrorKind::Threshold,
            message,
        }
    }
    pub fn check_failed(message: String) -> Self {
        Self {
            kind: CliErrorKind::CheckFailed,
            message,
        }
    }
    pub fn io(message: String) -> Self {
        Self {
            kind: CliErrorKind::Io,
            message,
        }
    }

    fn exit_code(&self) -> u8 {
        match self.kind {
            CliErrorKind::Config | CliErrorKind::Data => 2,
            CliErrorKind::Degenerate => 3,
            CliErrorKind::Threshold => 4,
            CliErrorKind::CheckFailed => 5,
            CliErrorKind::Io => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "mest",
    version,
    about = "M-estimation for distributional regression: simulate, fit, experiment, check"
)]
struct Cli {
    /// Number of worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML config file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config's `seed` field.
    #[arg(long)]
    seed: Option<u64>,
    /// Output root (default: $MEST_OUT or ./mest-out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a data row from the configured scenario and write CSV.
    Simulate(CommonArgs),
    /// Fit the configured scenario to a data CSV.
    Fit {
        #[command(flatten)]
        common: CommonArgs,
        /// Data CSV (covariate columns then the response column).
        #[arg(long)]
        data: PathBuf,
    },
    /// Run the configured consistency experiment (resumable per cell).
    Experiment {
        #[command(flatten)]
        common: CommonArgs,
        /// Print the resolved plan without executing.
        #[arg(long)]
        dry_run: bool,
    },
    /// Run the configured diagnostic suites.
    Check(CommonArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .ok();
    }
    match cli.command {
        Command::Simulate(common) => {
            let (cfg, snapshot) = config::load(&common.config)?;
            let seed = cfg.resolve_seed(common.seed)?;
            let out = output::resolve_out_root(common.out);
            commands::simulate(&cfg, snapshot, &common.config, seed, &out)
        }
        Command::Fit { common, data } => {
            let (cfg, snapshot) = config::load(&common.config)?;
            let seed = cfg.resolve_seed(common.seed)?;
            let out = output::resolve_out_root(common.out);
            commands::fit(&cfg, snapshot, &common.config, &data, seed, &out)
        }
        Command::Experiment { common, dry_run } => {
            let (cfg, snapshot) = config::load(&common.config)?;
            let seed = cfg.resolve_seed(common.seed)?;
            let out = output::resolve_out_root(common.out);
            commands::experiment(&cfg, snapshot, &common.config, seed, &out, dry_run)
        }
        Command::Check(common) => {
            let (cfg, snapshot) = config::load(&common.config)?;
            let seed = cfg.resolve_seed(common.seed)?;
            let out = output::resolve_out_root(common.out);
            commands::check(&cfg, snapshot, &common.config, seed, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.exit_code())
        }
    }
}
