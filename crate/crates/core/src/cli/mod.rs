//! JSON experiment configs and the `crossfit` command-line tool.
//!
//! Exit codes: 0 success, 2 invalid config or method, 3 some method
//! produced no estimate, 4 I/O failure.

mod commands;
mod config;

pub use commands::{cmd_run, cmd_schedule, cmd_simulate, cmd_validate, ScheduleFormat};
pub use config::{AggregatorName, DataSource, ExperimentConfig, MethodConfig, NuisanceConfig};

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::engine::EngineError;

/// Environment variable read as `--seed`. Either one overrides the config's
/// `seed`; with neither, the config seed or 0 is used.
pub const SEED_ENV: &str = "CROSSFIT_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("unknown method {name:?} (available: {})", available.join(", "))]
    UnknownMethod { name: String, available: Vec<String> },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => EXIT_IO,
            _ => EXIT_INVALID,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "crossfit", version, about = "Cross-fitting experiments from JSON configs")]
pub struct Cli {
    /// Seed for fold splits; overrides the config's `seed`.
    #[arg(long, global = true, env = SEED_ENV)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every method of a config and print a JSON report.
    Validate { config: PathBuf },
    /// Print the fold schedule of one method.
    Schedule {
        config: PathBuf,
        #[arg(long)]
        method: String,
        #[arg(long, default_value_t = 0)]
        rep: usize,
        #[arg(long, value_enum, default_value_t = ScheduleFormat::Text)]
        format: ScheduleFormat,
    },
    /// Run all methods once and write a JSON result per method.
    Run {
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Monte-Carlo study over fresh DGP draws; writes CSV.
    Simulate {
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Runs a parsed command line, writing normal output to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run_cli(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let res = match cli.command {
        Command::Validate { config } => cmd_validate(&config, out),
        Command::Schedule {
            config,
            method,
            rep,
            format,
        } => cmd_schedule(&config, &method, rep, format, cli.seed, out),
        Command::Run { config, output } => cmd_run(&config, output.as_deref(), cli.seed, out),
        Command::Simulate { config, output } => cmd_simulate(&config, output.as_deref(), cli.seed, out),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
