use thiserror::Error;

/// Errors raised by the approximations, solvers and the Monte Carlo oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violates a precondition (bad window length, start above the barrier, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The formula is defined, but not on this branch of the horizon.
    #[error("domain error: {0}")]
    Domain(String),

    /// A denominator of a closed form vanishes.
    #[error("singular input: {0}")]
    Singular(String),

    /// An iterative solver stopped before reaching its tolerance.
    #[error("no convergence after {iterations} iterations (last estimate {last})")]
    Convergence { iterations: usize, last: f64 },

    #[error("unsupported tolerance {0:e}")]
    UnsupportedTolerance(f64),

    /// A Monte Carlo estimate makes the requested formula undefined.
    #[error("degenerate estimate: {0}")]
    DegenerateEstimate(String),

    /// A calibration target lies outside the values the method can reach.
    #[error("target {target} outside achievable range [{low}, {high}]")]
    OutOfRange { target: f64, low: f64, high: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of a numerical procedure rather than of the caller's input.
    pub fn is_numeric_failure(&self) -> bool {
        matches!(
            self,
            Error::Convergence { .. } | Error::Singular(_) | Error::DegenerateEstimate(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
