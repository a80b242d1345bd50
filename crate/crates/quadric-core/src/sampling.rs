//! Random poses, quadrics and tangent vectors for tests and synthetic scenes.

use nalgebra::{DVector, UnitQuaternion, Vector3, Vector6};
use rand::Rng;

use crate::{Quadric, QuadricClass, RigidTransform, ScaleDiag, Signature, TangentVector};

/// Uniform vector in the ball of the given radius.
pub fn vector_in_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n <= 1.0 && n > 0.0 {
            let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
            return v * (r / n);
        }
    }
}

pub fn rotation<R: Rng + ?Sized>(rng: &mut R) -> UnitQuaternion<f64> {
    // Uniform on SO(3) via a normalised Gaussian-ish 4-vector.
    loop {
        let q = nalgebra::Quaternion::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = q.norm();
        if n > 0.1 && n <= 1.0 {
            return UnitQuaternion::from_quaternion(q);
        }
    }
}

pub fn pose<R: Rng + ?Sized>(rng: &mut R, translation_extent: f64) -> RigidTransform {
    let t = Vector3::from_fn(|_, _| rng.random_range(-translation_extent..translation_extent));
    RigidTransform::from_quaternion(&rotation(rng), t)
}

/// Small twist with norm below `radius`.
pub fn twist<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> Vector6<f64> {
    Vector6::from_iterator(vector_in_ball(rng, 6, radius).iter().copied())
}

/// Signatures of the real general quadric surfaces (excluding the
/// zero-volume ones a random general scale cannot exercise).
pub const GENERAL_SIGNATURES: [[i8; 4]; 4] =
    [[1, 1, 1, -1], [1, 1, -1, -1], [1, -1, -1, -1], [1, 1, -1, 0]];

/// Random quadric of the class, scales in `[0.5, 2]` (radii `[0.5, 2]` m).
pub fn quadric<R: Rng + ?Sized>(rng: &mut R, class: QuadricClass) -> Quadric {
    let pose = pose(rng, 3.0);
    let mut s = || rng.random_range(0.5..2.0);
    match class {
        QuadricClass::General => {
            let scale = ScaleDiag::new(s(), s(), s()).expect("positive");
            let sig = GENERAL_SIGNATURES[rng.random_range(0..GENERAL_SIGNATURES.len())];
            Quadric::general(Signature::new(sig).expect("valid"), pose, scale)
        }
        QuadricClass::Plane => Quadric::new(class, pose, ScaleDiag::unit()).expect("valid"),
        QuadricClass::Sphere => {
            Quadric::new(class, pose, ScaleDiag::uniform(s()).expect("positive")).expect("valid")
        }
        QuadricClass::CircularCylinder | QuadricClass::CircularCone => {
            let a = s();
            Quadric::new(class, pose, ScaleDiag::new(a, a, 1.0).expect("positive"))
                .expect("valid")
        }
    }
}

/// Random reduced perturbation with norm below `radius`.
pub fn tangent<R: Rng + ?Sized>(rng: &mut R, class: QuadricClass, radius: f64) -> TangentVector {
    TangentVector::new(vector_in_ball(rng, class.dof(), radius))
}

/// Points on the quadric surface in world coordinates, sampled in a bounded
/// patch of the canonical frame.
pub fn surface_points<R: Rng + ?Sized>(rng: &mut R, q: &Quadric, n: usize) -> Vec<Vector3<f64>> {
    let s = q.scale().as_array();
    let sig = q.signature().entries();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let local = match q.class() {
            QuadricClass::Plane => Vector3::new(
                0.0,
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            ),
            QuadricClass::Sphere => {
                let d = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
                if d.norm() < 0.1 {
                    continue;
                }
                d.normalize() / s[0]
            }
            QuadricClass::CircularCylinder => {
                let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                Vector3::new(a.cos() / s[0], a.sin() / s[0], rng.random_range(-2.0..2.0))
            }
            QuadricClass::CircularCone => {
                let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let z: f64 = rng.random_range(-2.0..2.0);
                if z.abs() < 0.05 {
                    continue;
                }
                Vector3::new(a.cos() * z.abs() / s[0], a.sin() * z.abs() / s[0], z)
            }
            QuadricClass::General => {
                // Solve for the last coordinate with a non-zero signature entry.
                let k = (0..3).rev().find(|&i| sig[i] != 0).expect("non-degenerate");
                let mut p = Vector3::from_fn(|_, _| rng.random_range(-2.0..2.0));
                let mut rest = sig[3] as f64;
                for i in 0..3 {
                    if i != k {
                        rest += sig[i] as f64 * s[i] * s[i] * p[i] * p[i];
                    }
                }
                let v = -rest / (sig[k] as f64 * s[k] * s[k]);
                if v < 0.0 {
                    continue;
                }
                p[k] = v.sqrt() * if rng.random::<bool>() { 1.0 } else { -1.0 };
                p
            }
        };
        out.push(q.pose().transform_point(&local));
    }
    out
}
