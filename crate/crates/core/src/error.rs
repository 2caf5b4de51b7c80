use thiserror::Error;

/// Errors produced by the numerical kernel and the physics layers built on it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("vector of length {0} is not a vectorized square matrix")]
    NotPerfectSquare(usize),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("{what} failed to converge (norm {norm:.3e}): {detail}")]
    NonConvergence {
        what: &'static str,
        norm: f64,
        detail: String,
    },

    #[error(
        "matrix is defective or too close to defective (eigenvector condition {condition:.3e})"
    )]
    Defective { condition: f64 },

    #[error("degenerate steady space: {count} eigenvalues within tolerance {tol:.3e} of zero")]
    DegenerateSteadyState { count: usize, tol: f64 },

    #[error("not a valid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
