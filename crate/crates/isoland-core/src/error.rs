//! Error type shared by all modules.

use alloc::string::String;
use core::fmt;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// A parameter or argument is outside the mathematical domain of the
    /// operation (e.g. Riesz exponent outside (0, d)).
    Domain(String),
    /// The grid cannot support the requested operation (too coarse,
    /// unresolved band, mismatched grids).
    Grid(String),
    /// A time step produced NaN/Inf or a linear solve failed.
    Numerical { step: usize, what: String },
    /// An iterative solver did not converge.
    NonConvergence { iterations: usize, residual: f64 },
    /// Not enough records/snapshots for a time-differencing diagnostic.
    TooFewRecords { got: usize, need: usize },
    /// A field violated a structural invariant (e.g. negativity beyond
    /// the clamping tolerance).
    Invariant(String),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::Domain(m) => write!(f, "domain error: {m}"),
            CoreError::Grid(m) => write!(f, "grid error: {m}"),
            CoreError::Numerical { step, what } => {
                write!(f, "numerical failure at step {step}: {what}")
            }
            CoreError::NonConvergence {
                iterations,
                residual,
            } => write!(
                f,
                "no convergence after {iterations} iterations (residual {residual:e})"
            ),
            CoreError::TooFewRecords { got, need } => {
                write!(f, "need at least {need} records, got {got}")
            }
            CoreError::Invariant(m) => write!(f, "invariant violation: {m}"),
        }
    }
}

#[cfg(test)]
impl std::error::Error for CoreError {}
