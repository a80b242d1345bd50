//! Synthetic scenes for exercising the quadric SLAM stack: seeded
//! measurement generation, ray-cast depth rendering, batch and incremental
//! runs, trajectory and landmark accuracy metrics, and per-stage runtime
//! reports.

mod batch;
mod detection;
mod error;
mod generate;
mod metrics;
mod render;
mod runtime;
mod scene;

pub use batch::{build_batch, run_batch, run_incremental, run_rendered, BatchResult};
pub use detection::{detection_scene, match_detections, DetectionScene};
pub use error::{Result, SynthError};
pub use generate::{
    dead_reckoning, generate_observations, observation_noise, odometry_noise, SyntheticFrame,
};
pub use metrics::{align_translations, evaluate_ate, quadric_error, Metrics};
pub use render::{generate_cloud, render, render_depth, Render};
pub use runtime::{runtime_report, RuntimeReport, RuntimeRow, REFERENCE_MS};
pub use scene::{circle_trajectory, look_at, NoiseSpec, SceneQuadric, SceneSpec};
