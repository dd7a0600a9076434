//! Command-line front end for `gtd-core`.
//!
//! Every command builds one JSON document; text output is rendered from it
//! with rounded numbers, so the two views never disagree on content.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gtd_core::Error;

mod commands;
mod input;
mod render;

pub use render::{format_sig, SIG_DIGITS};

pub const EXIT_OK: u8 = 0;
/// A computed check did not meet its tolerance.
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NO_HOMOGENEITY: u8 = 3;
pub const EXIT_SINGULAR: u8 = 4;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "gtd", version, about = "Quasi-homogeneity and representation-change metrics for thermodynamic potentials")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect quasi-homogeneity weights from sampled points.
    Analyze(Common),
    /// Audit the generalized Euler identity.
    Euler(Common),
    /// Print the base metric and the c3 verdict.
    Metric(Common),
    /// Compare every representation-change construction.
    Repchange(Common),
    /// Evaluate the representation change over a two-variable grid.
    Scan(ScanArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChiArg {
    Delta,
    Eta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Built-in system: kerr-newman or rn.
    #[arg(long, conflicts_with = "file")]
    pub system: Option<String>,
    /// JSON system file.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Parameter override, e.g. d=5.
    #[arg(long = "param", value_name = "K=V")]
    pub params: Vec<String>,
    /// Evaluation point, e.g. S=1,Q=0.5. Repeatable.
    #[arg(long = "point", value_name = "VAR=V,...", allow_hyphen_values = true)]
    pub points: Vec<String>,
    /// Variable replaced by the potential in the new representation.
    #[arg(long)]
    pub rep: Option<String>,
    #[arg(long, value_enum, default_value = "delta")]
    pub chi: ChiArg,
    /// Λ values in variable order.
    #[arg(long, value_name = "V1,...", allow_hyphen_values = true)]
    pub lambda: Option<String>,
    /// ξ values in variable order.
    #[arg(long, value_name = "V1,...", allow_hyphen_values = true)]
    pub xi: Option<String>,
    /// Degree of the supplied weights (requires --powers).
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Supplied powers p_a, e.g. S=0.5,J=0.5,Q=1.
    #[arg(long, value_name = "VAR=P,...", allow_hyphen_values = true)]
    pub powers: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: Common,
    /// Grid axis VAR=lo:hi:n; give exactly two.
    #[arg(long = "grid", value_name = "VAR=LO:HI:N", allow_hyphen_values = true)]
    pub grid: Vec<String>,
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Analyze(c) | Command::Euler(c) | Command::Metric(c) | Command::Repchange(c) => c,
            Command::Scan(s) => &s.common,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::SingularRepresentation { .. } => EXIT_SINGULAR,
            Error::DegenerateConformal(_) | Error::IllConditioned { .. } | Error::AsymmetricHessian { .. } => {
                EXIT_CHECK_FAILED
            }
            _ => EXIT_INPUT,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

/// A rendered report and the exit code it implies.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: u8,
    pub body: String,
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Analyze(c) => commands::analyze(c),
        Command::Euler(c) => commands::euler(c),
        Command::Metric(c) => commands::metric(c),
        Command::Repchange(c) => commands::repchange(c),
        Command::Scan(s) => commands::scan(s),
    }
}

/// Writes the report to `--out` or standard output.
pub fn emit(cli: &Cli, outcome: &Outcome) -> Result<(), CliError> {
    match &cli.command.common().out {
        Some(path) => fs::write(path, &outcome.body)
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(outcome.body.as_bytes())
            .map_err(|e| CliError::input(format!("cannot write output: {e}"))),
    }
}
