//! Nonlinear least squares over sensor poses and quadric landmarks.
//!
//! Variables are SE(3) poses and [`quadric_core::Quadric`]s; factors are a
//! pose prior, relative-pose odometry, and quadric observations made in the
//! sensor frame. Each factor contributes `½·rᵀΣ⁻¹r` with residuals taken as
//! `prediction ⊟ measurement`, and Jacobians are with respect to the
//! right-retraction perturbation of every variable, so quadric blocks have as
//! many columns as the landmark class has degrees of freedom.

mod error;
mod factor;
mod graph;
pub mod linear;
pub mod snapshot;
mod solver;
mod variables;

pub use error::{GraphError, Result};
pub use factor::{
    observation_jacobians, observation_residual, odometry_jacobians, odometry_residual,
    prior_jacobian, prior_residual, Factor, Huber, LinearizedFactor, Measurement,
};
pub use graph::FactorGraph;
pub use linear::{linearize, solve_normal_equations, LinearSystem, Ordering};
pub use solver::{retract_all, solve, Method, SolveOptions, SolveReport, Termination};
pub use variables::{GraphEstimate, VariableKey};
