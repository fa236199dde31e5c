//! `fbnet`: compose networks, run sweeps, regenerate figures and run the
//! acceptance suite.
//!
//! Exit codes: 0 success, 1 an acceptance check failed, 2 usage or parse
//! error, 3 solver failure.

mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;

use config::{Cli, Command, FileConfig, Merge};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// Already rendered diagnostics.
    #[error("{0}")]
    Parse(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Format(#[from] fbnet_core::io::IoError),
    /// Outputs were written but some check did not pass.
    #[error("{0} check(s) failed")]
    CheckFailed(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Usage(_) | CliError::Parse(_) | CliError::Io(_) | CliError::Format(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let global = cli.global.merge(file.global());
    let ctx = commands::Context::new(global)?;
    match cli.command {
        Command::Compose(o) => commands::compose(&ctx, o.merge(file.compose)),
        Command::Meanfield(o) => commands::meanfield(&ctx, o.merge(file.meanfield)),
        Command::G2(o) => commands::g2(&ctx, o.merge(file.g2)),
        Command::Analytic(o) => commands::analytic(&ctx, o.merge(file.analytic)),
        Command::Reproduce(o) => commands::reproduce(&ctx, o.merge(file.reproduce)),
        Command::Check(o) => commands::check(&ctx, o.merge(file.check)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::CheckFailed(_)) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
