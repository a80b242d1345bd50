//! Quadric landmark SLAM over depth sequences.
//!
//! Each frame is backprojected, registered to the previous one with ICP,
//! and segmented into planes, spheres, cylinders and cones. Detections are
//! associated with landmarks by their weighted manifold error under the
//! predicted pose. A landmark enters the factor graph once it has been seen
//! in `promotion_threshold` frames, bringing its buffered observations with
//! it, and the whole graph is re-solved with dog-leg after every frame.

mod associate;
mod config;
mod error;
mod export;
mod landmark;
mod pipeline;
mod sequence;

pub use associate::{associate, association_cost, Association};
pub use config::{ObservationNoise, PipelineConfig};
pub use error::{PipelineError, Result};
pub use export::{
    export_map, export_reconstruction, export_trajectory, format_map, format_ply,
    format_trajectory, parse_trajectory, reconstruction_points, ColorMode, ReconstructedPoint,
};
pub use landmark::{ArchiveEntry, Landmark};
pub use pipeline::{FrameInput, FrameRecord, FrameResult, FrameTimings, Observation, Pipeline};
pub use sequence::run_sequence;
