use thiserror::Error;

/// Errors raised by the covariance calculus, the samplers and the experiments.
#[derive(Debug, Error)]
pub enum LabError {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A formula was called outside the regime in which it holds.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Requested grid or matrix exceeds the configured resource cap.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Cholesky factorization failed even at the maximum jitter.
    #[error(
        "matrix could not be factorized with jitter up to {max_jitter:e} (min eigenvalue estimate {min_eigenvalue:e})"
    )]
    Conditioning { max_jitter: f64, min_eigenvalue: f64 },

    /// A matrix that must be symmetric is not.
    #[error("matrix is not symmetric: |m[{row}][{col}] - m[{col}][{row}]| = {deviation:e}")]
    Asymmetric { row: usize, col: usize, deviation: f64 },

    /// The sampled grid does not contain the points a statistic needs.
    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
