use thiserror::Error;

/// Errors raised by the library.
///
/// Variants split into two families the CLI maps onto exit codes:
/// validation failures (bad grids, bad parameters, violated preconditions)
/// and numerical failures (singular inversions, non-convergence, LAPACK).
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {left} vs {right} cells")]
    GridMismatch { left: usize, right: usize },

    #[error("{0} is not aligned to the grid")]
    Misaligned(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("word length {len} exceeds brute-force guard {max}")]
    LengthGuard { len: usize, max: usize },

    #[error("support condition violated: {0}")]
    SupportViolation(String),

    #[error("singular inversion: {0}")]
    Singular(String),

    #[error("fixed point did not converge within {iterations} iterations (last change {last_change:.3e})")]
    NonConvergence { iterations: usize, last_change: f64 },

    #[error("linear algebra backend: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
}

impl Error {
    /// True for errors of the numerical-failure family (CLI exit code 3);
    /// everything else is input validation (exit code 2).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular(_) | Error::NonConvergence { .. } | Error::Linalg(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
