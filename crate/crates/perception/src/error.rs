use quadric_core::QuadricError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PerceptionError {
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("depth image is {got:?} but intrinsics expect {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("insufficient overlap: {correspondences} correspondences")]
    InsufficientOverlap { correspondences: usize },
    #[error("cloud has no points with normals")]
    EmptyCloud,
    #[error("degenerate primitive: {0}")]
    DegeneratePrimitive(&'static str),
    #[error(transparent)]
    Quadric(#[from] QuadricError),
    #[error("{path}: {message}")]
    Image { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, PerceptionError>;
