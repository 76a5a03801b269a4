//! Command-line front end for the virtual power plant offering toolkit.
//!
//! Four subcommands cover the full workflow: `gen-scenarios` turns quantile
//! forecasts into a reduced scenario tree, `solve` optimizes the offering
//! plan and writes solution artifacts, `export-mps` hands the model to
//! external solvers, and `report` renders the solve artifacts as SVG charts.
//!
//! The generating and solving commands record a `manifest.json` in their
//! output directory so a run can be reproduced from the recorded inputs,
//! seed, and limits alone; `report` only rereads existing artifacts.

pub mod config;
pub mod export;
pub mod manifest;
pub mod render;
pub mod report;
pub mod scenarios;
pub mod solve;

use std::ffi::OsString;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;
use vpp_core::{OfferError, ParseModeError, StrategyMode};

/// Process exit code for command-line usage errors.
const USAGE_EXIT: i32 = 4;

/// Failure classes, each tied to one process exit code. Solver outcomes that
/// are not failures (infeasible, limit reached) are regular return values of
/// the command functions instead.
#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid flags, configuration, or input data. Exit code 4.
    #[error("{0}")]
    Validation(String),
    /// Failed filesystem access. Exit code 5.
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    /// The solver or a downstream consistency check failed. Exit code 1.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 4,
            CliError::Io { .. } => 5,
            CliError::Numerical(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "vpp",
    version,
    about = "Offering strategies for a virtual power plant in day-ahead and balancing markets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample correlated trajectories from quantile forecasts and reduce them to a tree
    GenScenarios(scenarios::GenScenariosArgs),
    /// Solve the offering problem and write solution, report, and curve files
    Solve(solve::SolveArgs),
    /// Build the offering model and write it as an MPS file
    ExportMps(export::ExportMpsArgs),
    /// Render SVG charts from a solved run directory
    Report(report::ReportArgs),
}

/// Initializes logging from the `VPP_LOG` environment variable
/// (`error`, `info`, or `debug`; default `error`).
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("VPP_LOG", "error");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
}

/// Parses the command line and runs the selected command, returning the
/// process exit code: 0 for success (an optimal solve included), 2 for a
/// proven infeasible instance, 3 when a search limit was hit, 4 for invalid
/// input, 5 for I/O failures, and 1 for numerical failures.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { USAGE_EXIT } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::GenScenarios(args) => scenarios::run(args),
        Command::Solve(args) => solve::run(args),
        Command::ExportMps(args) => export::run(args),
        Command::Report(args) => report::run(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

pub(crate) fn parse_mode(text: &str) -> Result<StrategyMode, CliError> {
    text.parse()
        .map_err(|e: ParseModeError| CliError::Validation(e.to_string()))
}

pub(crate) fn map_offer_error(err: OfferError) -> CliError {
    match err {
        OfferError::Invalid(_) => CliError::Validation(err.to_string()),
        OfferError::Numerical => {
            CliError::Numerical("the solver reported a numerical failure".into())
        }
        other => CliError::Numerical(other.to_string()),
    }
}

pub(crate) fn create_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}
