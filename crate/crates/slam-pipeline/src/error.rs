use factor_graph::GraphError;
use perception::PerceptionError;
use quadric_core::QuadricError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Quadric(#[from] QuadricError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("map has no promoted landmarks")]
    EmptyMap,
    #[error("trajectory line {line}: {message}")]
    Trajectory { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, PipelineError>;
