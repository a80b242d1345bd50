//! Quadric surfaces as least-squares landmarks.
//!
//! A quadric is stored as a rigid pose `T_WQ` (quadric frame to world), a
//! positive diagonal scale `S` of inverse semi-axis lengths, and a
//! [`Signature`] selecting the canonical surface `diag(σ)`. Its homogeneous
//! matrix is
//!
//! ```text
//! Q = (T_WQ⁻¹)ᵀ · [S 0; 0 1]ᵀ · diag(σ) · [S 0; 0 1] · T_WQ⁻¹
//! ```
//!
//! Every class carries a minimal tangent space (9 dof for a general quadric,
//! 3 to 6 for the constrained classes) with `⊞`/`⊟` operators built on the
//! right-multiplicative SE(3) retraction `T ⊞ ξ = T·exp(ξ^)` and the additive
//! scale update `S ⊞ s = S + diag(s)`.

mod class;
mod error;
mod manifold;
mod matrix;
mod project;
mod raycast;
pub mod sampling;
pub mod se3;
mod text;

pub use class::{canonical_matrix, class_signature, QuadricClass, Signature};
pub use error::QuadricError;
pub use manifold::{
    boxminus, boxminus_with_jacobian, boxplus, boxplus_full, excluded_directions,
    invariant_directions, lifting_matrix, lifting_pseudo_inverse, pose_excluded_indices,
    TangentVector, FULL_DIM,
};
pub use matrix::{HomogeneousQuadricMatrix, Quadric, ScaleDiag};
pub use project::project_point;
pub use raycast::{intersect_ray, LocalBox};
pub use se3::RigidTransform;
pub use text::{format_quadric, parse_quadric};

pub type Result<T> = std::result::Result<T, QuadricError>;
