use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};

use crate::{class_signature, QuadricClass, QuadricError, Result, RigidTransform, Signature};

/// Diagonal scale `S = diag(α, β, γ)`; entries are inverse semi-axis lengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleDiag {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl ScaleDiag {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let s = Self { alpha, beta, gamma };
        if s.as_array().iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(s)
        } else {
            Err(QuadricError::ScaleNotPositive(s.as_array()))
        }
    }

    pub fn uniform(v: f64) -> Result<Self> {
        Self::new(v, v, v)
    }

    pub fn unit() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.alpha, self.beta, self.gamma]
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.alpha, self.beta, self.gamma)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Result<Self> {
        Self::new(v.x, v.y, v.z)
    }

    fn satisfies(&self, class: QuadricClass) -> bool {
        let eq = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        match class {
            QuadricClass::General => true,
            QuadricClass::Plane => {
                eq(self.alpha, 1.0) && eq(self.beta, 1.0) && eq(self.gamma, 1.0)
            }
            QuadricClass::Sphere => eq(self.alpha, self.beta) && eq(self.beta, self.gamma),
            QuadricClass::CircularCylinder | QuadricClass::CircularCone => {
                eq(self.alpha, self.beta) && eq(self.gamma, 1.0)
            }
        }
    }
}

/// Symmetric 4×4 quadric matrix, normalised so the largest-magnitude entry
/// is 1 in absolute value and the first non-zero entry (row-major) is
/// positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousQuadricMatrix(Matrix4<f64>);

impl HomogeneousQuadricMatrix {
    pub fn from_raw(m: Matrix4<f64>) -> Self {
        let sym = (m + m.transpose()) * 0.5;
        let max = sym.abs().max();
        if max == 0.0 {
            return Self(sym);
        }
        let mut first = 0.0;
        // row-major scan
        'outer: for r in 0..4 {
            for c in 0..4 {
                if sym[(r, c)].abs() > 1e-12 * max {
                    first = sym[(r, c)];
                    break 'outer;
                }
            }
        }
        let scale = if first < 0.0 { -1.0 / max } else { 1.0 / max };
        Self(sym * scale)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn evaluate(&self, p: &Vector3<f64>) -> f64 {
        let h = Vector4::new(p.x, p.y, p.z, 1.0);
        h.dot(&(self.0 * h))
    }

    /// Largest absolute entry difference between the two normalised matrices.
    pub fn max_difference(&self, other: &Self) -> f64 {
        (self.0 - other.0).abs().max()
    }
}

/// A quadric landmark `π = (T_WQ, S, σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadric {
    class: QuadricClass,
    signature: Signature,
    pose: RigidTransform,
    scale: ScaleDiag,
}

impl Quadric {
    /// Quadric of a constrained class; its signature comes from the class.
    pub fn new(class: QuadricClass, pose: RigidTransform, scale: ScaleDiag) -> Result<Self> {
        let signature = class_signature(class)?;
        if !scale.satisfies(class) {
            return Err(QuadricError::ScaleConstraint {
                class,
                scale: scale.as_array(),
            });
        }
        Ok(Self {
            class,
            signature,
            pose,
            scale,
        })
    }

    pub fn general(signature: Signature, pose: RigidTransform, scale: ScaleDiag) -> Self {
        Self {
            class: QuadricClass::General,
            signature,
            pose,
            scale,
        }
    }

    pub(crate) fn with_parts(&self, pose: RigidTransform, scale: ScaleDiag) -> Result<Self> {
        if !scale.satisfies(self.class) {
            return Err(QuadricError::ScaleConstraint {
                class: self.class,
                scale: scale.as_array(),
            });
        }
        Ok(Self {
            pose,
            scale,
            ..*self
        })
    }

    pub fn with_pose(&self, pose: RigidTransform) -> Self {
        Self { pose, ..*self }
    }

    pub fn sphere(center: Vector3<f64>, radius: f64) -> Result<Self> {
        Self::new(
            QuadricClass::Sphere,
            RigidTransform::from_translation(center),
            ScaleDiag::uniform(1.0 / radius)?,
        )
    }

    /// Plane `n·x = offset`. The quadric-frame x axis is the unit normal.
    pub fn plane(normal: Vector3<f64>, offset: f64) -> Result<Self> {
        let n = unit_axis(&normal)?;
        let rotation = frame_with_axis(&n, 0);
        Self::new(
            QuadricClass::Plane,
            RigidTransform::from_parts_unchecked(rotation, n * offset),
            ScaleDiag::unit(),
        )
    }

    /// Circular cylinder; the quadric-frame z axis is the cylinder axis.
    pub fn cylinder(axis_point: Vector3<f64>, axis: Vector3<f64>, radius: f64) -> Result<Self> {
        let a = unit_axis(&axis)?;
        let s = 1.0 / radius;
        Self::new(
            QuadricClass::CircularCylinder,
            RigidTransform::from_parts_unchecked(frame_with_axis(&a, 2), axis_point),
            ScaleDiag::new(s, s, 1.0)?,
        )
    }

    /// Circular (double) cone with its apex at the quadric-frame origin.
    pub fn cone(apex: Vector3<f64>, axis: Vector3<f64>, half_angle: f64) -> Result<Self> {
        let a = unit_axis(&axis)?;
        let s = 1.0 / half_angle.tan();
        Self::new(
            QuadricClass::CircularCone,
            RigidTransform::from_parts_unchecked(frame_with_axis(&a, 2), apex),
            ScaleDiag::new(s, s, 1.0)?,
        )
    }

    pub fn class(&self) -> QuadricClass {
        self.class
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn pose(&self) -> &RigidTransform {
        &self.pose
    }

    pub fn scale(&self) -> &ScaleDiag {
        &self.scale
    }

    /// `[S 0; 0ᵀ 1]ᵀ D(σ) [S 0; 0ᵀ 1]` in the quadric frame.
    pub fn canonical_scaled(&self) -> Vector4<f64> {
        let [a, b, c, d] = self.signature.as_f64();
        let s = self.scale;
        Vector4::new(
            a * s.alpha * s.alpha,
            b * s.beta * s.beta,
            c * s.gamma * s.gamma,
            d,
        )
    }

    /// Un-normalised world matrix `(T_WQ⁻¹)ᵀ C T_WQ⁻¹`.
    pub fn raw_matrix(&self) -> Matrix4<f64> {
        let m = self.pose.inverse().matrix();
        m.transpose() * Matrix4::from_diagonal(&self.canonical_scaled()) * m
    }

    pub fn to_matrix(&self) -> HomogeneousQuadricMatrix {
        HomogeneousQuadricMatrix::from_raw(self.raw_matrix())
    }

    /// `h̃ᵀ Q h̃` with the normalised matrix; zero exactly on the surface.
    pub fn evaluate(&self, p: &Vector3<f64>) -> f64 {
        self.to_matrix().evaluate(p)
    }

    /// The prediction `h(T_WC, π) = (T_WC⁻¹·T_WQ, S)`: this quadric expressed
    /// in the frame whose world pose is `frame`.
    pub fn expressed_in(&self, frame: &RigidTransform) -> Self {
        Self {
            pose: frame.inverse() * self.pose,
            ..*self
        }
    }

    /// Inverse of [`Quadric::expressed_in`]: a quadric given in `frame`
    /// coordinates moved to the world.
    pub fn to_world(&self, frame: &RigidTransform) -> Self {
        Self {
            pose: *frame * self.pose,
            ..*self
        }
    }
}

pub(crate) fn unit_axis(v: &Vector3<f64>) -> Result<Vector3<f64>> {
    let n = v.norm();
    if !(n > 1e-12) || !n.is_finite() {
        return Err(QuadricError::DegenerateProjection("zero-length axis"));
    }
    Ok(v / n)
}

/// Deterministic right-handed frame whose column `which` is `axis`.
pub(crate) fn frame_with_axis(axis: &Vector3<f64>, which: usize) -> Matrix3<f64> {
    // Seed with the coordinate axis least aligned with `axis`.
    let seed = {
        let a = axis.abs();
        if a.x <= a.y && a.x <= a.z {
            Vector3::x()
        } else if a.y <= a.z {
            Vector3::y()
        } else {
            Vector3::z()
        }
    };
    let u = (seed - axis * axis.dot(&seed)).normalize();
    let v = axis.cross(&u);
    // columns (axis, u, v) form a right-handed frame; rotate to put axis at `which`
    let cols = match which {
        0 => [*axis, u, v],
        1 => [v, *axis, u],
        _ => [u, v, *axis],
    };
    Matrix3::from_columns(&cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::UnitQuaternion;

    fn diag(a: f64, b: f64, c: f64, d: f64) -> Matrix4<f64> {
        Matrix4::from_diagonal(&Vector4::new(a, b, c, d))
    }

    #[test]
    fn unit_sphere_at_origin() {
        let q = Quadric::sphere(Vector3::zeros(), 1.0).unwrap();
        assert_eq!(*q.to_matrix().matrix(), diag(1.0, 1.0, 1.0, -1.0));
    }

    #[test]
    fn scaled_ellipsoid() {
        let q = Quadric::general(
            Signature::SPHERE,
            RigidTransform::identity(),
            ScaleDiag::new(1.0, 0.5, 2.0).unwrap(),
        );
        // x² + y²/4 + 4z² = 1, normalised by 4
        let expected = diag(0.25, 0.0625, 1.0, -0.25);
        assert!((q.to_matrix().matrix() - expected).abs().max() < 1e-15);
        for p in [
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 2.0, 0.0),
            Vector3::new(0.0, 0.0, 0.5),
        ] {
            assert!(q.evaluate(&p).abs() < 1e-15);
        }
    }

    #[test]
    fn posed_ellipsoid_from_table_row_three() {
        // Third demonstration row: permuted axes and a translation of 3 along y.
        let r = Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0);
        let pose = RigidTransform::new(r, Vector3::new(0.0, 3.0, 0.0)).unwrap();
        let q = Quadric::general(Signature::SPHERE, pose, ScaleDiag::new(1.0, 0.5, 2.0).unwrap());
        // Canonical point on the semi-axis of length 2 (y in the quadric frame).
        let p_local = Vector3::new(0.0, 2.0, 0.0);
        assert!(q.evaluate(&pose.transform_point(&p_local)).abs() < 1e-14);
        assert!(q.evaluate(pose.translation()) < 0.0);
    }

    #[test]
    fn offset_sphere_contains_expected_point() {
        let q = Quadric::sphere(Vector3::new(1.0, 2.0, 3.0), 2.0).unwrap();
        assert!(q.evaluate(&Vector3::new(3.0, 2.0, 3.0)).abs() < 1e-14);
        assert!(q.evaluate(&Vector3::new(1.0, 2.0, 3.0)) < 0.0);
    }

    #[test]
    fn evaluate_examples() {
        let s = Quadric::sphere(Vector3::zeros(), 1.0).unwrap();
        assert_eq!(s.evaluate(&Vector3::new(1.0, 0.0, 0.0)), 0.0);
        assert_eq!(s.evaluate(&Vector3::zeros()), -1.0);
        let p = Quadric::new(QuadricClass::Plane, RigidTransform::identity(), ScaleDiag::unit())
            .unwrap();
        assert_eq!(p.evaluate(&Vector3::new(2.0, 5.0, -1.0)), 4.0);
    }

    #[test]
    fn normalisation_is_deterministic_and_symmetric() {
        let pose = RigidTransform::from_quaternion(
            &UnitQuaternion::from_euler_angles(0.3, -0.2, 1.1),
            Vector3::new(0.5, -1.0, 2.0),
        );
        let q = Quadric::general(
            Signature::new([1, 1, -1, -1]).unwrap(),
            pose,
            ScaleDiag::new(0.7, 1.3, 0.4).unwrap(),
        );
        let m = q.to_matrix();
        assert!((m.matrix() - m.matrix().transpose()).abs().max() < 1e-12);
        assert!((m.matrix().abs().max() - 1.0).abs() < 1e-15);
        let neg = HomogeneousQuadricMatrix::from_raw(-q.raw_matrix() * 3.7);
        assert!(neg.max_difference(&m) < 1e-14);
    }

    #[test]
    fn scale_constraints_are_enforced() {
        let bad = ScaleDiag::new(1.0, 2.0, 1.0).unwrap();
        assert!(Quadric::new(QuadricClass::Sphere, RigidTransform::identity(), bad).is_err());
        assert!(Quadric::new(QuadricClass::Plane, RigidTransform::identity(), bad).is_err());
        assert!(ScaleDiag::new(1.0, 0.0, 1.0).is_err());
        assert!(ScaleDiag::new(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn transform_changes_frame() {
        let q = Quadric::sphere(Vector3::new(1.0, 0.0, 0.0), 1.0).unwrap();
        assert_eq!(q.expressed_in(&RigidTransform::identity()), q);
        let t = RigidTransform::from_translation(Vector3::new(1.0, 0.0, 0.0));
        assert_eq!(*q.expressed_in(&t).pose().translation(), Vector3::zeros());
    }

    #[test]
    fn transform_preserves_surface() {
        let t = RigidTransform::from_quaternion(
            &UnitQuaternion::from_euler_angles(0.4, 0.1, -0.9),
            Vector3::new(1.0, -2.0, 0.5),
        );
        let q = Quadric::general(
            Signature::new([1, 1, -1, -1]).unwrap(),
            RigidTransform::from_quaternion(
                &UnitQuaternion::from_euler_angles(-0.2, 0.7, 0.3),
                Vector3::new(0.1, 0.2, 0.3),
            ),
            ScaleDiag::new(0.8, 1.2, 0.5).unwrap(),
        );
        let local = q.expressed_in(&t);
        let t_inv = t.inverse();
        for p in [
            Vector3::new(0.3, -0.4, 1.0),
            Vector3::new(2.0, 1.0, -1.0),
            Vector3::new(-1.5, 0.5, 0.0),
        ] {
            let a = local.raw_matrix();
            let h = t_inv.transform_point(&p);
            let lhs = Vector4::new(h.x, h.y, h.z, 1.0).dot(&(a * Vector4::new(h.x, h.y, h.z, 1.0)));
            let b = q.raw_matrix();
            let rhs = Vector4::new(p.x, p.y, p.z, 1.0).dot(&(b * Vector4::new(p.x, p.y, p.z, 1.0)));
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn primitive_constructors_land_on_their_surfaces() {
        let plane = Quadric::plane(Vector3::new(1.0, 0.0, 0.0), 4.0).unwrap();
        for (y, z) in [(0.0, 0.0), (3.0, -2.0), (-10.0, 5.5)] {
            assert!(plane.evaluate(&Vector3::new(4.0, y, z)).abs() < 1e-12);
        }
        let cone = Quadric::cone(Vector3::zeros(), Vector3::z(), std::f64::consts::FRAC_PI_4)
            .unwrap();
        assert!((cone.scale().alpha - 1.0).abs() < 1e-15);
        assert!(cone.evaluate(&Vector3::new(1.0, 0.0, 1.0)).abs() < 1e-15);
        let cyl = Quadric::cylinder(Vector3::new(1.0, 1.0, 0.0), Vector3::z(), 0.5).unwrap();
        assert!(cyl.evaluate(&Vector3::new(1.5, 1.0, 7.0)).abs() < 1e-15);
    }

    #[test]
    fn frames_are_rotations() {
        for axis in [Vector3::x(), Vector3::new(0.3, -0.4, 0.866).normalize(), -Vector3::z()] {
            for which in 0..3 {
                let r = frame_with_axis(&axis, which);
                assert!(RigidTransform::new(r, Vector3::zeros()).is_ok());
                assert!((r.column(which) - axis).norm() < 1e-15);
            }
        }
    }
}
