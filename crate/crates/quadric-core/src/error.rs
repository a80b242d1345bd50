use thiserror::Error;

use crate::QuadricClass;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadricError {
    #[error("signature must be supplied for the general class")]
    SignatureRequired,

    #[error("unsupported signature {0:?}")]
    UnsupportedSignature([i8; 4]),

    #[error("rotation is not orthonormal with det +1 (deviation {0:e})")]
    NotARotation(f64),

    #[error("scale left positive domain: {0:?}")]
    ScaleNotPositive([f64; 3]),

    #[error("scale {scale:?} violates the {class} class constraints")]
    ScaleConstraint { class: QuadricClass, scale: [f64; 3] },

    #[error("tangent vector has {got} components, class {class} needs {expected}")]
    TangentDimension {
        class: QuadricClass,
        expected: usize,
        got: usize,
    },

    #[error("class mismatch: {0} vs {1}")]
    ClassMismatch(QuadricClass, QuadricClass),

    #[error("signature mismatch: {0:?} vs {1:?}")]
    SignatureMismatch([i8; 4], [i8; 4]),

    #[error("log branch ambiguous: rotation angle {0} is too close to pi")]
    LogBranchAmbiguous(f64),

    #[error("point lies on the degenerate locus of the projection ({0})")]
    DegenerateProjection(&'static str),

    #[error("projection did not converge, constraint residual {0:e}")]
    ProjectionNotConverged(f64),

    #[error("parse error: {0}")]
    Parse(String),
}
