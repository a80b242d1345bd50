use factor_graph::GraphError;
use perception::PerceptionError;
use quadric_core::QuadricError;
use slam_pipeline::PipelineError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("trajectories have {estimated} and {truth} poses")]
    LengthMismatch { estimated: usize, truth: usize },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("scene line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Quadric(#[from] QuadricError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

pub type Result<T> = std::result::Result<T, SynthError>;
