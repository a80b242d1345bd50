//! Depth-camera front-end: backprojection of depth images, normal
//! estimation, point-to-plane ICP odometry, and randomized detection of
//! planes, spheres, circular cylinders and circular cones, which are returned
//! as [`quadric_core::Quadric`]s in the sensor frame.

mod camera;
mod cloud;
pub mod dataset;
mod error;
mod icp;
pub mod keyvalue;
mod ransac;
pub mod refine;
mod shapes;

pub use camera::{DepthImage, Intrinsics};
pub use cloud::{backproject, estimate_normals, OrganizedCloud};
pub use error::{PerceptionError, Result};
pub use icp::{icp_point_to_plane, IcpParams, IcpResult};
pub use ransac::{detect_shapes, DetectionParams};
pub use shapes::{
    fit_from_samples, minimal_samples, primitive_to_quadric, Primitive, ShapeDetection,
};
