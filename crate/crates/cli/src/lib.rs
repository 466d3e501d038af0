//! Library behind the `gquant` binary.
//!
//! Exit codes: 0 success, 1 validation error, 2 verification failure.

use std::ffi::OsString;
use std::io::Write;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub mod commands;
pub mod config;

use config::{CommonArgs, EvolveArgs, QuantizeArgs, RunConfig, SweepArgs, VerifyArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
        }
    }
}

/// Rendered output and the exit status it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub body: String,
    /// 0 when every check passed, 2 otherwise.
    pub status: u8,
}

impl Outcome {
    pub fn ok(body: String) -> Self {
        Self { body, status: 0 }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gquant", version, about = "Grassmann quantization and two-spin pseudo-hermitian dynamics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form and numerical spectrum of the two-spin Hamiltonian.
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Regime map over a grid of field amplitudes.
    RegimeSweep {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Transition amplitude time series.
    Evolve {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        evolve: EvolveArgs,
    },
    /// Quantize a Grassmann element read from JSON.
    QuantizeFile {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        quantize: QuantizeArgs,
    },
    /// Run the invariant suites and print a JSON report.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        verify: VerifyArgs,
    },
}

impl Command {
    /// Merged configuration for this invocation.
    pub fn config(&self) -> Result<RunConfig, CliError> {
        match self {
            Command::Spectrum { common } => common.resolve(RunConfig::default()),
            Command::RegimeSweep { common, sweep } => common.resolve(sweep.to_config()),
            Command::Evolve { common, evolve } => common.resolve(evolve.to_config()),
            Command::QuantizeFile { common, quantize } => common.resolve(quantize.to_config()),
            Command::Verify { common, verify } => common.resolve(verify.to_config()),
        }
    }

    pub fn execute(&self, cfg: &RunConfig) -> Result<Outcome, CliError> {
        match self {
            Command::Spectrum { .. } => commands::cmd_spectrum(cfg),
            Command::RegimeSweep { .. } => commands::cmd_regime_sweep(cfg),
            Command::Evolve { .. } => commands::cmd_evolve(cfg),
            Command::QuantizeFile { .. } => commands::cmd_quantize(cfg),
            Command::Verify { .. } => commands::cmd_verify(cfg),
        }
    }
}

fn emit(cfg: &RunConfig, body: &str) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| CliError::Validation(format!("writing {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Validation(format!("writing stdout: {e}")))
        }
    }
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = cli
        .command
        .config()
        .and_then(|cfg| cli.command.execute(&cfg).map(|o| (cfg, o)))
        .and_then(|(cfg, o)| emit(&cfg, &o.body).map(|_| o.status));
    match result {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
