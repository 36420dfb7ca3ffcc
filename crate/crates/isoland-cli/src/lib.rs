//! Library backing the `isoland` command-line tool: run configuration,
//! artifact formats (CSV, manifest, snapshots), and the subcommand
//! implementations.

pub mod commands;
pub mod config;
pub mod io;

use isoland_core::CoreError;

/// Errors surfaced to the process exit code.
#[derive(Debug, Clone)]
pub enum CliError {
    /// Bad configuration or missing inputs — exit code 1.
    Config(String),
    /// Numerical breakdown or solver non-convergence — exit code 2.
    Numerical(String),
    /// A structural invariant (conservation, inequality, bound) failed —
    /// exit code 3.
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
            CliError::Invariant(m) => write!(f, "invariant violation: {m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Domain(_) | CoreError::Grid(_) | CoreError::TooFewRecords { .. } => {
                CliError::Config(e.to_string())
            }
            CoreError::Numerical { .. } | CoreError::NonConvergence { .. } => {
                CliError::Numerical(e.to_string())
            }
            CoreError::Invariant(_) => CliError::Invariant(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
