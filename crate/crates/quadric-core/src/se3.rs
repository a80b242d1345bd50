//! SE(3) with twists ordered `(ρ, φ)`: translation block first, rotation
//! block second.
//!
//! The retraction used everywhere is right-multiplicative,
//! `T ⊞ ξ = T·exp(ξ^)` and `T ⊟ T' = log(T'⁻¹·T)^∨`, so `T' ⊞ (T ⊟ T') = T`
//! holds on the principal branch of the logarithm.

use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::{Matrix3, Matrix4, Matrix6, Rotation3, UnitQuaternion, Vector3, Vector6};

use crate::{QuadricError, Result};

/// Below this angle `exp`/`log` switch to their series expansions.
pub const SMALL_ANGLE: f64 = 1e-8;

/// `log` refuses rotations closer than this to a half turn.
pub const LOG_BRANCH_MARGIN: f64 = 1e-6;

/// Rigid-body transform `x ↦ R·x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Checked constructor: `R·Rᵀ = I` and `det R = 1` within 1e-9.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let orth = (rotation * rotation.transpose() - Matrix3::identity()).abs().max();
        let det = (rotation.determinant() - 1.0).abs();
        let dev = orth.max(det);
        if !(dev <= 1e-9) {
            return Err(QuadricError::NotARotation(dev));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    /// Unchecked constructor for rotations produced by this module.
    pub(crate) fn from_parts_unchecked(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    pub fn from_quaternion(q: &UnitQuaternion<f64>, t: Vector3<f64>) -> Self {
        Self {
            rotation: *q.to_rotation_matrix().matrix(),
            translation: t,
        }
    }

    pub fn from_rotation(r: &Rotation3<f64>, t: Vector3<f64>) -> Self {
        Self {
            rotation: *r.matrix(),
            translation: t,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_matrix(&self.rotation)
    }

    pub fn matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// Adjoint in `(ρ, φ)` ordering: `T·exp(δ) = exp(Ad_T·δ)·T`.
    pub fn adjoint(&self) -> Matrix6<f64> {
        let mut ad = Matrix6::zeros();
        ad.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        ad.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.rotation);
        ad.fixed_view_mut::<3, 3>(0, 3)
            .copy_from(&(hat(&self.translation) * self.rotation));
        ad
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        rotation_angle(&self.rotation)
    }

    /// Re-orthonormalises the rotation block (polar projection via SVD).
    pub fn renormalized(&self) -> Self {
        Self {
            rotation: orthonormalize(&self.rotation),
            translation: self.translation,
        }
    }

    /// `T ⊞ ξ = T·exp(ξ^)`.
    pub fn retract(&self, xi: &Vector6<f64>) -> Self {
        *self * exp(xi)
    }

    /// `T ⊟ T' = log(T'⁻¹·T)^∨`.
    pub fn local(&self, reference: &RigidTransform) -> Result<Vector6<f64>> {
        log(&(reference.inverse() * *self))
    }
}

impl Mul for RigidTransform {
    type Output = RigidTransform;

    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * rhs.rotation,
            translation: self.rotation * rhs.translation + self.translation,
        }
    }
}

pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// 4×4 lift of a twist: `[φ^ ρ; 0ᵀ 0]`.
pub fn hat6(xi: &Vector6<f64>) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&hat(&xi.fixed_rows::<3>(3).into_owned()));
    m.fixed_view_mut::<3, 1>(0, 3)
        .copy_from(&xi.fixed_rows::<3>(0));
    m
}

/// Inverse of [`hat6`].
pub fn vee6(m: &Matrix4<f64>) -> Vector6<f64> {
    Vector6::new(m[(0, 3)], m[(1, 3)], m[(2, 3)], m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

pub(crate) fn rotation_angle(r: &Matrix3<f64>) -> f64 {
    let v = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]) * 0.5;
    let c = 0.5 * (r.trace() - 1.0);
    v.norm().atan2(c)
}

pub(crate) fn orthonormalize(r: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = r.svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let mut d = Matrix3::identity();
    if (u * vt).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    u * d * vt
}

fn sin_over(theta: f64) -> f64 {
    if theta < SMALL_ANGLE {
        1.0 - theta * theta / 6.0
    } else {
        theta.sin() / theta
    }
}

/// `(1 - cos θ)/θ²`, written with the half-angle to avoid cancellation.
fn one_minus_cos_over(theta: f64) -> f64 {
    if theta < SMALL_ANGLE {
        0.5 - theta * theta / 24.0
    } else {
        let s = (0.5 * theta).sin() / theta;
        2.0 * s * s
    }
}

/// `(θ - sin θ)/θ³`.
fn theta_minus_sin_over(theta: f64) -> f64 {
    if theta < 1e-2 {
        let t2 = theta * theta;
        1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0 - t2 * t2 * t2 / 362_880.0
    } else {
        (theta - theta.sin()) / (theta * theta * theta)
    }
}

/// `1/θ² - (1 + cos θ)/(2θ sin θ)`, the φ^² coefficient of `J_l⁻¹`.
fn inv_left_jac_coeff(theta: f64) -> f64 {
    if theta < 1e-2 {
        let t2 = theta * theta;
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30_240.0 + t2 * t2 * t2 / 1_209_600.0
    } else {
        1.0 / (theta * theta) - (1.0 + theta.cos()) / (2.0 * theta * theta.sin())
    }
}

/// `(θ² + 2cos θ - 2)/(2θ⁴)`.
fn q_coeff2(theta: f64) -> f64 {
    if theta < 0.1 {
        let t2 = theta * theta;
        1.0 / 24.0 - t2 / 720.0 + t2 * t2 / 40_320.0 - t2 * t2 * t2 / 3_628_800.0
            + t2 * t2 * t2 * t2 / 479_001_600.0
    } else {
        let t2 = theta * theta;
        (t2 + 2.0 * theta.cos() - 2.0) / (2.0 * t2 * t2)
    }
}

/// `(2θ - 3 sin θ + θ cos θ)/(2θ⁵)`.
fn q_coeff3(theta: f64) -> f64 {
    if theta < 0.1 {
        let t2 = theta * theta;
        1.0 / 120.0 - t2 / 2520.0 + t2 * t2 / 120_960.0 - t2 * t2 * t2 / 9_979_200.0
            + t2 * t2 * t2 * t2 / 1_245_404_160.0
    } else {
        let t2 = theta * theta;
        (2.0 * theta - 3.0 * theta.sin() + theta * theta.cos()) / (2.0 * t2 * t2 * theta)
    }
}

/// Rodrigues' formula.
pub fn so3_exp(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta = phi.norm();
    let k = hat(phi);
    Matrix3::identity() + k * sin_over(theta) + k * k * one_minus_cos_over(theta)
}

/// Principal logarithm; errors within [`LOG_BRANCH_MARGIN`] of a half turn.
pub fn so3_log(r: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let v = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]) * 0.5;
    let s = v.norm();
    let c = 0.5 * (r.trace() - 1.0);
    let theta = s.atan2(c);
    if theta > PI - LOG_BRANCH_MARGIN {
        return Err(QuadricError::LogBranchAmbiguous(theta));
    }
    if theta < SMALL_ANGLE {
        Ok(v * (1.0 + theta * theta / 6.0))
    } else {
        Ok(v * (theta / s))
    }
}

/// Left Jacobian of SO(3).
pub fn so3_left_jacobian(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta = phi.norm();
    let k = hat(phi);
    Matrix3::identity() + k * one_minus_cos_over(theta) + k * k * theta_minus_sin_over(theta)
}

pub fn so3_left_jacobian_inv(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta = phi.norm();
    let k = hat(phi);
    Matrix3::identity() - k * 0.5 + k * k * inv_left_jac_coeff(theta)
}

/// Translation/rotation coupling block of the SE(3) left Jacobian.
fn se3_q_block(rho: &Vector3<f64>, phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta = phi.norm();
    let p = hat(phi);
    let r = hat(rho);
    let pr = p * r;
    let rp = r * p;
    let prp = pr * p;
    let pp = p * p;
    r * 0.5
        + (pr + rp + prp) * theta_minus_sin_over(theta)
        + (pp * r + rp * p - prp * 3.0) * q_coeff2(theta)
        + (prp * p + pp * r * p) * q_coeff3(theta)
}

pub fn exp(xi: &Vector6<f64>) -> RigidTransform {
    let rho = xi.fixed_rows::<3>(0).into_owned();
    let phi = xi.fixed_rows::<3>(3).into_owned();
    RigidTransform {
        rotation: so3_exp(&phi),
        translation: so3_left_jacobian(&phi) * rho,
    }
}

pub fn log(t: &RigidTransform) -> Result<Vector6<f64>> {
    let phi = so3_log(&t.rotation)?;
    let rho = so3_left_jacobian_inv(&phi) * t.translation;
    let mut xi = Vector6::zeros();
    xi.fixed_rows_mut::<3>(0).copy_from(&rho);
    xi.fixed_rows_mut::<3>(3).copy_from(&phi);
    Ok(xi)
}

/// Left Jacobian of SE(3): `exp(ξ + δ) ≈ exp(J_l(ξ)·δ)·exp(ξ)`.
pub fn left_jacobian(xi: &Vector6<f64>) -> Matrix6<f64> {
    let rho = xi.fixed_rows::<3>(0).into_owned();
    let phi = xi.fixed_rows::<3>(3).into_owned();
    let jl = so3_left_jacobian(&phi);
    let mut j = Matrix6::zeros();
    j.fixed_view_mut::<3, 3>(0, 0).copy_from(&jl);
    j.fixed_view_mut::<3, 3>(3, 3).copy_from(&jl);
    j.fixed_view_mut::<3, 3>(0, 3).copy_from(&se3_q_block(&rho, &phi));
    j
}

pub fn left_jacobian_inv(xi: &Vector6<f64>) -> Matrix6<f64> {
    let rho = xi.fixed_rows::<3>(0).into_owned();
    let phi = xi.fixed_rows::<3>(3).into_owned();
    let jl_inv = so3_left_jacobian_inv(&phi);
    let q = se3_q_block(&rho, &phi);
    let mut j = Matrix6::zeros();
    j.fixed_view_mut::<3, 3>(0, 0).copy_from(&jl_inv);
    j.fixed_view_mut::<3, 3>(3, 3).copy_from(&jl_inv);
    j.fixed_view_mut::<3, 3>(0, 3)
        .copy_from(&(-(jl_inv * q * jl_inv)));
    j
}

/// Right Jacobian inverse: `log(exp(ξ)·exp(δ)) ≈ ξ + J_r⁻¹(ξ)·δ`.
pub fn right_jacobian_inv(xi: &Vector6<f64>) -> Matrix6<f64> {
    left_jacobian_inv(&(-xi))
}

pub fn right_jacobian(xi: &Vector6<f64>) -> Matrix6<f64> {
    left_jacobian(&(-xi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    /// Scaling-and-squaring Taylor evaluation of the 4×4 matrix exponential.
    fn expm_oracle(a: &Matrix4<f64>) -> Matrix4<f64> {
        let norm = a.abs().max();
        let squarings = (norm.max(1e-300).log2().ceil().max(0.0) as i32) + 4;
        let scaled = a / 2f64.powi(squarings);
        let mut term = Matrix4::identity();
        let mut sum = Matrix4::identity();
        for k in 1..30 {
            term = term * scaled / k as f64;
            sum += term;
        }
        for _ in 0..squarings {
            sum = sum * sum;
        }
        sum
    }

    fn twist(v: [f64; 6]) -> Vector6<f64> {
        Vector6::from_row_slice(&v)
    }

    #[test]
    fn exp_of_zero_is_identity() {
        assert_eq!(exp(&Vector6::zeros()), RigidTransform::identity());
    }

    #[test]
    fn pure_translation_twist() {
        let t = exp(&twist([1.0, 2.0, 3.0, 0.0, 0.0, 0.0]));
        assert_eq!(*t.rotation(), Matrix3::identity());
        assert_eq!(*t.translation(), Vector3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn quarter_turn_about_z_matches_oracle() {
        let xi = twist([0.0, 0.0, 0.0, 0.0, 0.0, FRAC_PI_2]);
        let oracle = expm_oracle(&hat6(&xi));
        let expected = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!((oracle.fixed_view::<3, 3>(0, 0) - expected).abs().max() < 1e-12);
        let t = exp(&xi);
        assert!((t.rotation() - expected).abs().max() < 1e-12);
        assert!(t.translation().norm() < 1e-15);
    }

    #[test]
    fn exp_matches_matrix_exponential() {
        for xi in [
            twist([0.1, -0.2, 0.3, 0.05, 0.1, -0.15]),
            twist([1.0, 2.0, -1.0, 1.2, -0.7, 0.4]),
            twist([0.3, 0.0, 0.1, 1e-9, 0.0, 2e-9]),
            twist([-0.5, 0.5, 2.0, 0.0, 2.5, -1.0]),
        ] {
            let oracle = expm_oracle(&hat6(&xi));
            assert!((exp(&xi).matrix() - oracle).abs().max() < 1e-12, "{xi}");
        }
    }

    #[test]
    fn log_identity_and_translation() {
        assert_eq!(log(&RigidTransform::identity()).unwrap(), Vector6::zeros());
        let t = RigidTransform::from_translation(Vector3::new(1.0, 2.0, 3.0));
        assert_eq!(log(&t).unwrap(), twist([1.0, 2.0, 3.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn log_inverts_exp() {
        let xi = twist([0.1, -0.2, 0.3, 0.05, 0.1, -0.15]);
        let back = log(&exp(&xi)).unwrap();
        assert!((back - xi).amax() < 1e-9);
    }

    #[test]
    fn log_near_half_turn_is_refused() {
        let t = exp(&twist([0.0, 0.0, 0.0, PI, 0.0, 0.0]));
        assert!(matches!(log(&t), Err(QuadricError::LogBranchAmbiguous(_))));
    }

    #[test]
    fn vee_inverts_hat() {
        let xi = twist([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(vee6(&hat6(&xi)), xi);
    }

    #[test]
    fn adjoint_moves_perturbations_across() {
        let t = exp(&twist([0.4, -1.0, 0.2, 0.3, 0.2, -0.6]));
        let d = twist([0.01, 0.02, -0.03, 0.02, -0.01, 0.015]);
        let lhs = t * exp(&d);
        let rhs = exp(&(t.adjoint() * d)) * t;
        assert!((lhs.matrix() - rhs.matrix()).abs().max() < 1e-12);
    }

    fn jacobian_fd(f: impl Fn(&Vector6<f64>) -> Vector6<f64>) -> Matrix6<f64> {
        let h = 1e-6;
        let mut j = Matrix6::zeros();
        for i in 0..6 {
            let mut e = Vector6::zeros();
            e[i] = h;
            j.set_column(i, &((f(&e) - f(&(-e))) / (2.0 * h)));
        }
        j
    }

    #[test]
    fn right_jacobian_inverse_matches_finite_differences() {
        for xi in [
            twist([0.4, -1.0, 0.2, 0.3, 0.2, -0.6]),
            twist([0.1, 0.2, 0.3, 1e-4, -2e-4, 1e-4]),
            twist([1.5, 0.0, -0.5, 0.0, 2.0, 0.5]),
        ] {
            let base = exp(&xi);
            let fd = jacobian_fd(|d| log(&(base * exp(d))).unwrap());
            let an = right_jacobian_inv(&xi);
            assert!((fd - an).abs().max() < 1e-7, "{xi}\n{fd}\n{an}");
            assert!((right_jacobian(&xi) * an - Matrix6::identity()).abs().max() < 1e-10);
        }
    }

    #[test]
    fn left_jacobian_matches_finite_differences() {
        let xi = twist([0.3, -0.2, 0.7, -0.4, 0.9, 0.1]);
        let fd = jacobian_fd(|d| log(&(exp(&(xi + d)) * exp(&xi).inverse())).unwrap());
        assert!((fd - left_jacobian(&xi)).abs().max() < 1e-7);
    }

    #[test]
    fn checked_constructor_rejects_non_rotations() {
        assert!(RigidTransform::new(Matrix3::identity() * 2.0, Vector3::zeros()).is_err());
        let reflect = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(RigidTransform::new(reflect, Vector3::zeros()).is_err());
    }
}
