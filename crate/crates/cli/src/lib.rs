//! Library side of the `qutrit-qkd` binary: argument types, configuration resolution and the
//! four commands.

pub mod config;
pub mod report;

use std::io::Write;

use clap::{Parser, Subcommand};
use qkd_core::QkdError;

pub use config::{Format, Overrides, ProtocolSel, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] QkdError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    /// 2 for anything the user can fix in the configuration, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(
                QkdError::InvalidParam { .. } | QkdError::Domain { .. } | QkdError::InvalidPhase(_),
            ) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qutrit-qkd",
    version,
    about = "Key rates, secure distances and Monte Carlo runs for BB84 and qutrit-encoded QKD"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full analytic breakdown at one length and mean photon number.
    #[command(allow_negative_numbers = true)]
    Keyrate(Overrides),
    /// Optimized key rate against distance (CSV by default).
    #[command(allow_negative_numbers = true)]
    Curve(Overrides),
    /// Largest distance with a positive optimized key rate.
    #[command(allow_negative_numbers = true)]
    Distance(Overrides),
    /// Monte Carlo run with an optional eavesdropper.
    #[command(allow_negative_numbers = true)]
    Simulate(Overrides),
}

/// Runs one command and writes its output to `--out` or standard output.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let (kind, flags) = match cli.command {
        Command::Keyrate(o) => (report::Kind::Keyrate, o),
        Command::Curve(o) => (report::Kind::Curve, o),
        Command::Distance(o) => (report::Kind::Distance, o),
        Command::Simulate(o) => (report::Kind::Simulate, o),
    };
    let (config, output) = config::resolve(flags)?;
    let format = output.format.unwrap_or(kind.default_format());

    let body = match output.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Internal(format!("cannot start worker pool: {e}")))?
            .install(|| report::render(kind, &config, format)),
        None => report::render(kind, &config, format),
    }?;

    match &output.out {
        Some(path) => std::fs::write(path, body)?,
        None => std::io::stdout().lock().write_all(body.as_bytes())?,
    }
    Ok(())
}
