use quadric_core::QuadricError;
use thiserror::Error;

use crate::VariableKey;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error(transparent)]
    Quadric(#[from] QuadricError),
    #[error("covariance is not symmetric positive definite")]
    CovarianceNotPositiveDefinite,
    #[error("covariance must be {expected}x{expected}, got {rows}x{cols}")]
    CovarianceDimension {
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("estimate has no value for {0}")]
    MissingVariable(VariableKey),
    #[error("graph has no factors")]
    EmptyGraph,
    #[error("normal matrix is rank deficient; underdetermined blocks: {blocks:?}")]
    RankDeficient { blocks: Vec<VariableKey> },
    #[error("snapshot line {line}: {message}")]
    Snapshot { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, GraphError>;
