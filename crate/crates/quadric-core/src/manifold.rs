//! `⊞`/`⊟` on quadrics and the per-class minimal tangent spaces.
//!
//! Full tangent coordinates are ordered `(ρ₁, ρ₂, ρ₃, φ₁, φ₂, φ₃, s_α, s_β, s_γ)`
//! with the pose twist applied on the right (`T·exp(ξ^)`), i.e. expressed in
//! the quadric's own frame. Each constrained class keeps the subset of
//! directions that change its surface; the remaining pose directions generate
//! the surface's continuous symmetry group and are quotiented out by `⊟`.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Matrix6, SVector, Vector2, Vector3, Vector6};

use crate::se3::{self, so3_exp, so3_left_jacobian_inv, so3_log};
use crate::{Quadric, QuadricClass, QuadricError, Result, RigidTransform, ScaleDiag};

pub const FULL_DIM: usize = 9;

/// Minimal perturbation of a quadric of a given class.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector(DVector<f64>);

impl TangentVector {
    pub fn new(coords: DVector<f64>) -> Self {
        Self(coords)
    }

    pub fn from_slice(coords: &[f64]) -> Self {
        Self(DVector::from_column_slice(coords))
    }

    pub fn zeros(class: QuadricClass) -> Self {
        Self(DVector::zeros(class.dof()))
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

/// Pose-twist indices kept by each class (the estimable directions).
fn pose_included_indices(class: QuadricClass) -> &'static [usize] {
    match class {
        QuadricClass::General => &[0, 1, 2, 3, 4, 5],
        QuadricClass::Plane => &[0, 4, 5],
        QuadricClass::Sphere => &[0, 1, 2],
        QuadricClass::CircularCylinder => &[0, 1, 3, 4],
        QuadricClass::CircularCone => &[0, 1, 2, 3, 4],
    }
}

/// Pose-twist indices along which the class's surface is invariant.
pub fn pose_excluded_indices(class: QuadricClass) -> &'static [usize] {
    match class {
        QuadricClass::General => &[],
        QuadricClass::Plane => &[1, 2, 3],
        QuadricClass::Sphere => &[3, 4, 5],
        QuadricClass::CircularCylinder => &[2, 5],
        QuadricClass::CircularCone => &[5],
    }
}

/// The constant `9 × dof` matrix `∂ξ/∂ξ_Q` lifting reduced coordinates into
/// the full tangent.
pub fn lifting_matrix(class: QuadricClass) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(FULL_DIM, class.dof());
    let pose = pose_included_indices(class);
    for (col, &row) in pose.iter().enumerate() {
        l[(row, col)] = 1.0;
    }
    let c = pose.len();
    match class {
        QuadricClass::General => {
            for k in 0..3 {
                l[(6 + k, c + k)] = 1.0;
            }
        }
        QuadricClass::Plane => {}
        QuadricClass::Sphere => {
            for k in 0..3 {
                l[(6 + k, c)] = 1.0;
            }
        }
        QuadricClass::CircularCylinder | QuadricClass::CircularCone => {
            l[(6, c)] = 1.0;
            l[(7, c)] = 1.0;
        }
    }
    l
}

/// Left inverse `(LᵀL)⁻¹Lᵀ` of the lifting matrix.
pub fn lifting_pseudo_inverse(class: QuadricClass) -> DMatrix<f64> {
    let l = lifting_matrix(class);
    let mut p = l.transpose();
    for r in 0..p.nrows() {
        let n: f64 = p.row(r).iter().map(|v| v * v).sum();
        p.row_mut(r).scale_mut(1.0 / n);
    }
    p
}

/// Unit full-tangent directions in the class-consistent complement of the
/// lifting matrix's column space: the pose directions the class excludes.
pub fn excluded_directions(class: QuadricClass) -> Vec<SVector<f64, FULL_DIM>> {
    pose_excluded_indices(class)
        .iter()
        .map(|&i| SVector::<f64, FULL_DIM>::ith(i, 1.0))
        .collect()
}

/// All unit full-tangent directions that leave the class's surface
/// unchanged: the excluded pose directions plus scale entries multiplying a
/// zero signature entry.
pub fn invariant_directions(class: QuadricClass) -> Vec<SVector<f64, FULL_DIM>> {
    let mut dirs = excluded_directions(class);
    let scale_dirs: &[usize] = match class {
        QuadricClass::Plane => &[6, 7, 8],
        QuadricClass::CircularCylinder => &[8],
        _ => &[],
    };
    dirs.extend(scale_dirs.iter().map(|&i| SVector::<f64, FULL_DIM>::ith(i, 1.0)));
    dirs
}

fn check_dim(class: QuadricClass, got: usize) -> Result<()> {
    if got != class.dof() {
        return Err(QuadricError::TangentDimension {
            class,
            expected: class.dof(),
            got,
        });
    }
    Ok(())
}

/// `π ⊞ δπ`: lift the reduced perturbation and apply
/// `(T_WQ·exp(ξ^), S + D(s))`.
pub fn boxplus(q: &Quadric, delta: &TangentVector) -> Result<Quadric> {
    check_dim(q.class(), delta.len())?;
    let full = lifting_matrix(q.class()) * delta.coords();
    let xi = Vector6::from_iterator(full.iter().take(6).copied());
    let s = Vector3::new(full[6], full[7], full[8]);
    let scale = q.scale().as_vector() + s;
    let scale = ScaleDiag::from_vector(&scale)?;
    q.with_parts(q.pose().retract(&xi), scale)
}

/// Applies a raw 9-vector without lifting. If the result breaks the class's
/// scale constraints it is returned as a general quadric with the same
/// signature.
pub fn boxplus_full(q: &Quadric, v: &SVector<f64, FULL_DIM>) -> Result<Quadric> {
    let xi = v.fixed_rows::<6>(0).into_owned();
    let scale = q.scale().as_vector() + v.fixed_rows::<3>(6);
    let scale = ScaleDiag::from_vector(&scale)?;
    let pose = q.pose().retract(&xi);
    Ok(q
        .with_parts(pose, scale)
        .unwrap_or_else(|_| Quadric::general(q.signature(), pose, scale)))
}

/// Result of quotienting a pose difference by the class's symmetry group.
struct Canonical {
    /// Symmetry element applied on the right of `q`'s pose.
    g: RigidTransform,
    /// `log(T_ref⁻¹ · T_q · g)`.
    xi: Vector6<f64>,
    /// Scale of `q` re-expressed in the permuted frame (general class only).
    scale: Vector3<f64>,
    /// `∂scale/∂(q's scale)`.
    scale_jac: Matrix3<f64>,
}

fn rotation_about(axis: usize, angle: f64) -> Matrix3<f64> {
    so3_exp(&(Vector3::ith(axis, 1.0) * angle))
}

/// Splits `r = swing · R_axis(ψ)` where the swing's rotation axis is
/// perpendicular to `axis`. Assumes `r·e_axis` is in the same hemisphere as
/// `e_axis`.
fn swing_twist(r: &Matrix3<f64>, axis: usize) -> (Matrix3<f64>, f64) {
    let e = Vector3::ith(axis, 1.0);
    let a = r.column(axis).into_owned();
    let k = e.cross(&a);
    let s = k.norm();
    let swing = if s < 1e-300 {
        Matrix3::identity()
    } else {
        so3_exp(&(k * (s.atan2(e.dot(&a)) / s)))
    };
    let twist = swing.transpose() * r;
    let (i, j) = ((axis + 1) % 3, (axis + 2) % 3);
    (swing, twist[(j, i)].atan2(twist[(i, i)]))
}

/// Proper signed permutation matrices (the 24 rotations of the cube), identity
/// first.
fn cube_rotations() -> Vec<(Matrix3<f64>, [usize; 3])> {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = Vec::with_capacity(24);
    for perm in PERMS {
        for signs in 0..8u8 {
            let mut m = Matrix3::zeros();
            for (col, &row) in perm.iter().enumerate() {
                m[(row, col)] = if signs & (1 << col) != 0 { -1.0 } else { 1.0 };
            }
            if m.determinant() > 0.0 {
                out.push((m, perm));
            }
        }
    }
    out
}

fn canonicalize(q: &Quadric, q_ref: &Quadric) -> Result<Canonical> {
    let d0 = q_ref.pose().inverse() * *q.pose();
    let rd = *d0.rotation();
    let td = *d0.translation();
    let identity_scale = |g: RigidTransform| -> Result<Canonical> {
        let xi = se3::log(&(d0 * g))?;
        Ok(Canonical {
            g,
            xi,
            scale: q.scale().as_vector(),
            scale_jac: Matrix3::identity(),
        })
    };
    match q.class() {
        QuadricClass::General => {
            let sig = q.signature().as_f64();
            let s = q.scale().as_array();
            let mut best: Option<(f64, Matrix3<f64>, [usize; 3])> = None;
            for (g, perm) in cube_rotations() {
                // `g` maps new-frame axis `col` onto old-frame axis `perm[col]`.
                let admissible = (0..3).all(|col| {
                    let i = perm[col];
                    sig[i] == sig[col] && (s[i] - s[col]).abs() <= 1e-6
                });
                if !admissible {
                    continue;
                }
                let score = (rd * g).trace();
                if best.as_ref().is_none_or(|(b, _, _)| score > *b + 1e-12) {
                    best = Some((score, g, perm));
                }
            }
            let (_, g, perm) = best.expect("identity is always admissible");
            let g = RigidTransform::from_parts_unchecked(g, Vector3::zeros());
            let xi = se3::log(&(d0 * g))?;
            let mut scale_jac = Matrix3::zeros();
            for (col, &i) in perm.iter().enumerate() {
                scale_jac[(col, i)] = 1.0;
            }
            Ok(Canonical {
                g,
                xi,
                scale: scale_jac * q.scale().as_vector(),
                scale_jac,
            })
        }
        QuadricClass::Sphere => identity_scale(RigidTransform::from_parts_unchecked(
            rd.transpose(),
            Vector3::zeros(),
        )),
        QuadricClass::CircularCone | QuadricClass::CircularCylinder => {
            let flip = if rd[(2, 2)] < 0.0 {
                rotation_about(0, std::f64::consts::PI)
            } else {
                Matrix3::identity()
            };
            let (swing, psi) = swing_twist(&(rd * flip), 2);
            let g_rot = flip * rotation_about(2, -psi);
            let mut g = RigidTransform::from_parts_unchecked(g_rot, Vector3::zeros());
            if q.class() == QuadricClass::CircularCylinder {
                let jinv = so3_left_jacobian_inv(&so3_log(&swing)?);
                let rho0 = jinv * td;
                let w = jinv * swing.column(2);
                let h = -rho0.z / w.z;
                g = g * RigidTransform::from_translation(Vector3::new(0.0, 0.0, h));
            }
            identity_scale(g)
        }
        QuadricClass::Plane => {
            let flip = if rd[(0, 0)] < 0.0 {
                rotation_about(2, std::f64::consts::PI)
            } else {
                Matrix3::identity()
            };
            let (swing, psi) = swing_twist(&(rd * flip), 0);
            let g_rot = flip * rotation_about(0, -psi);
            let jinv = so3_left_jacobian_inv(&so3_log(&swing)?);
            let rho0 = jinv * td;
            let m = jinv * swing;
            let a = Matrix2::new(m[(1, 1)], m[(1, 2)], m[(2, 1)], m[(2, 2)]);
            let ab = a
                .lu()
                .solve(&Vector2::new(-rho0.y, -rho0.z))
                .unwrap_or_else(Vector2::zeros);
            let g = RigidTransform::from_parts_unchecked(g_rot, Vector3::zeros())
                * RigidTransform::from_translation(Vector3::new(0.0, ab.x, ab.y));
            identity_scale(g)
        }
    }
}

fn check_same_class(q: &Quadric, q_ref: &Quadric) -> Result<()> {
    if q.class() != q_ref.class() {
        return Err(QuadricError::ClassMismatch(q.class(), q_ref.class()));
    }
    if q.signature() != q_ref.signature() {
        return Err(QuadricError::SignatureMismatch(
            q.signature().entries(),
            q_ref.signature().entries(),
        ));
    }
    Ok(())
}

fn full_difference(c: &Canonical, q_ref: &Quadric) -> DVector<f64> {
    let ds = c.scale - q_ref.scale().as_vector();
    DVector::from_iterator(FULL_DIM, c.xi.iter().copied().chain(ds.iter().copied()))
}

/// `π ⊟ π'`: the reduced tangent `δ` with `π' ⊞ δ = π` (up to the class's
/// surface symmetries).
pub fn boxminus(q: &Quadric, q_ref: &Quadric) -> Result<TangentVector> {
    check_same_class(q, q_ref)?;
    let c = canonicalize(q, q_ref)?;
    let full = full_difference(&c, q_ref);
    Ok(TangentVector(lifting_pseudo_inverse(q.class()) * full))
}

/// [`boxminus`] together with its `dof × 9` Jacobian with respect to a full
/// (unlifted) perturbation `q ⊞ v` of the first argument.
pub fn boxminus_with_jacobian(
    q: &Quadric,
    q_ref: &Quadric,
) -> Result<(TangentVector, DMatrix<f64>)> {
    check_same_class(q, q_ref)?;
    let class = q.class();
    let c = canonicalize(q, q_ref)?;
    let pinv = lifting_pseudo_inverse(class);
    let r = &pinv * full_difference(&c, q_ref);

    // q·exp(ε)·g = q·g·exp(Ad_{g⁻¹} ε); the symmetry coordinates η re-solve
    // E·log(D·exp(ε')·exp(Eᵀη)) = 0, which projects out the excluded rows.
    let a = se3::right_jacobian_inv(&c.xi);
    let excluded = pose_excluded_indices(class);
    let projected: Matrix6<f64> = if excluded.is_empty() {
        a
    } else {
        let e = excluded.len();
        let a_dyn = DMatrix::from_column_slice(6, 6, a.as_slice());
        let mut a_et = DMatrix::zeros(6, e);
        let mut e_a = DMatrix::zeros(e, 6);
        for (k, &i) in excluded.iter().enumerate() {
            a_et.set_column(k, &a_dyn.column(i));
            e_a.set_row(k, &a_dyn.row(i));
        }
        let mut e_a_et = DMatrix::zeros(e, e);
        for (k, &i) in excluded.iter().enumerate() {
            e_a_et.set_row(k, &a_et.row(i));
        }
        let inv = e_a_et
            .try_inverse()
            .ok_or(QuadricError::DegenerateProjection("symmetry quotient is singular"))?;
        let corr = a_et * inv * e_a;
        let p = a_dyn - corr;
        Matrix6::from_column_slice(p.as_slice())
    };
    let pose_jac = projected * c.g.inverse().adjoint();
    let mut full = DMatrix::zeros(FULL_DIM, FULL_DIM);
    full.view_mut((0, 0), (6, 6)).copy_from(&pose_jac);
    full.view_mut((6, 6), (3, 3)).copy_from(&c.scale_jac);
    Ok((TangentVector(r), pinv * full))
}
