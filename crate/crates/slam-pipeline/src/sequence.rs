use std::path::Path;

use perception::dataset::{load_depth_png, load_rgb_png, read_sequence};

use crate::pipeline::{FrameInput, FrameResult};
use crate::{Pipeline, PipelineConfig, Result};

/// Runs the pipeline over a TUM-style sequence directory, calling
/// `on_frame` after each frame.
pub fn run_sequence(
    dir: &Path,
    config: PipelineConfig,
    max_frames: Option<usize>,
    mut on_frame: impl FnMut(&FrameResult),
) -> Result<Pipeline> {
    let frames = read_sequence(dir)?;
    let mut pipeline = Pipeline::new(config)?;
    for frame in frames.iter().take(max_frames.unwrap_or(usize::MAX)) {
        let depth = load_depth_png(&frame.depth)?;
        let rgb = match &frame.rgb {
            Some(p) if p.exists() => Some(load_rgb_png(p)?),
            _ => None,
        };
        let result = pipeline.integrate_frame(&FrameInput {
            timestamp: frame.timestamp,
            depth,
            rgb,
        })?;
        on_frame(&result);
    }
    Ok(pipeline)
}
