//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by solvers, the environment, and the learning algorithms.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric: max deviation {deviation:.3e} exceeds tolerance {tolerance:.3e}")]
    NotSymmetric { deviation: f64, tolerance: f64 },

    #[error("vector length {len} is not a triangular number n(n+1)/2")]
    NotTriangular { len: usize },

    #[error("{context}: matrix is not positive definite")]
    NotPositiveDefinite { context: String },

    #[error("closed loop is unstable: spectral radius {rho:.6} >= 1")]
    Unstable { rho: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: String,
        iterations: usize,
        residual: f64,
    },

    #[error("singular matrix in {context} (condition number {condition:.3e})")]
    Singular { context: String, condition: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;
