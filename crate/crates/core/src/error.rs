//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// Input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// `a` has no multiplicative inverse modulo `q`.
    #[error("{a} is not invertible modulo {q}")]
    NonInvertible { a: i64, q: u64 },

    /// Request exceeds a hard size limit (range, cutoff, overflow).
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Affine map does not permute the residues modulo `q`.
    #[error("degenerate affine map: {0}")]
    DegenerateMap(String),

    /// Parameters violate a stated hypothesis of the statistic.
    #[error("hypothesis violation: {0}")]
    Hypothesis(String),
}

pub type Result<T> = std::result::Result<T, Error>;
