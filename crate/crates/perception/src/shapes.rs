use nalgebra::{Matrix3, Vector3};
use quadric_core::{Quadric, QuadricClass};

use crate::{PerceptionError, Result};

/// Geometric primitive as detected in a sensor frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Primitive {
    /// Points with `normal·x = offset`.
    Plane { normal: Vector3<f64>, offset: f64 },
    Sphere { centre: Vector3<f64>, radius: f64 },
    Cylinder {
        point: Vector3<f64>,
        axis: Vector3<f64>,
        radius: f64,
    },
    /// The nappe opening from `apex` along `axis`.
    Cone {
        apex: Vector3<f64>,
        axis: Vector3<f64>,
        half_angle: f64,
    },
}

impl Primitive {
    pub fn class(&self) -> QuadricClass {
        match self {
            Primitive::Plane { .. } => QuadricClass::Plane,
            Primitive::Sphere { .. } => QuadricClass::Sphere,
            Primitive::Cylinder { .. } => QuadricClass::CircularCylinder,
            Primitive::Cone { .. } => QuadricClass::CircularCone,
        }
    }

    /// Signed distance to the surface: positive outside spheres, cylinders
    /// and cones, along the normal for planes.
    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        match *self {
            Primitive::Plane { normal, offset } => normal.dot(p) - offset,
            Primitive::Sphere { centre, radius } => (p - centre).norm() - radius,
            Primitive::Cylinder {
                point,
                axis,
                radius,
            } => {
                let q = p - point;
                (q - axis * q.dot(&axis)).norm() - radius
            }
            Primitive::Cone {
                apex,
                axis,
                half_angle,
            } => {
                let q = p - apex;
                let h = q.dot(&axis);
                let rho = (q - axis * h).norm();
                let (s, c) = half_angle.sin_cos();
                if rho * s + h * c >= 0.0 {
                    rho * c - h * s
                } else {
                    q.norm()
                }
            }
        }
    }

    pub fn distance(&self, p: &Vector3<f64>) -> f64 {
        self.signed_distance(p).abs()
    }

    /// Unit surface normal at the foot of `p` (sign unspecified).
    pub fn normal_at(&self, p: &Vector3<f64>) -> Option<Vector3<f64>> {
        let n = match *self {
            Primitive::Plane { normal, .. } => normal,
            Primitive::Sphere { centre, .. } => p - centre,
            Primitive::Cylinder { point, axis, .. } => {
                let q = p - point;
                q - axis * q.dot(&axis)
            }
            Primitive::Cone {
                apex,
                axis,
                half_angle,
            } => {
                let q = p - apex;
                let radial = q - axis * q.dot(&axis);
                let norm = radial.norm();
                if norm == 0.0 {
                    return None;
                }
                let (s, c) = half_angle.sin_cos();
                radial / norm * c - axis * s
            }
        };
        let norm = n.norm();
        (norm > 0.0).then(|| n / norm)
    }

    /// Within `epsilon` of the surface with a normal within the angle whose
    /// cosine is `cos_threshold` (either orientation).
    pub fn is_compatible(
        &self,
        p: &Vector3<f64>,
        n: &Vector3<f64>,
        epsilon: f64,
        cos_threshold: f64,
    ) -> bool {
        self.distance(p) <= epsilon
            && self
                .normal_at(p)
                .is_some_and(|m| m.dot(n).abs() >= cos_threshold)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: &Vector3<f64>| (v.norm() - 1.0).abs() < 1e-9;
        let ok = match *self {
            Primitive::Plane { normal, offset } => unit(&normal) && offset.is_finite(),
            Primitive::Sphere { centre, radius } => {
                radius > 0.0 && radius.is_finite() && centre.iter().all(|c| c.is_finite())
            }
            Primitive::Cylinder {
                point,
                axis,
                radius,
            } => radius > 0.0 && radius.is_finite() && unit(&axis) && point.iter().all(|c| c.is_finite()),
            Primitive::Cone {
                apex,
                axis,
                half_angle,
            } => {
                half_angle > 0.0
                    && half_angle < std::f64::consts::FRAC_PI_2
                    && unit(&axis)
                    && apex.iter().all(|c| c.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(PerceptionError::DegeneratePrimitive(match self {
                Primitive::Plane { .. } => "plane needs a unit normal",
                Primitive::Sphere { .. } => "sphere needs a positive radius",
                Primitive::Cylinder { .. } => "cylinder needs a unit axis and positive radius",
                Primitive::Cone { .. } => "cone needs a unit axis and half-angle in (0, π/2)",
            }))
        }
    }

    /// Largest discrepancy between two primitives of the same class, over
    /// their parameters (lengths in metres, directions as chord length,
    /// angles in radians). Axes and plane normals are compared up to sign.
    pub fn parameter_error(&self, other: &Primitive) -> Option<f64> {
        let dir = |a: &Vector3<f64>, b: &Vector3<f64>| (a - b).norm().min((a + b).norm());
        Some(match (*self, *other) {
            (
                Primitive::Plane { normal, offset },
                Primitive::Plane {
                    normal: n2,
                    offset: o2,
                },
            ) => {
                let (n2, o2) = if normal.dot(&n2) < 0.0 { (-n2, -o2) } else { (n2, o2) };
                (normal - n2).norm().max((offset - o2).abs())
            }
            (
                Primitive::Sphere { centre, radius },
                Primitive::Sphere {
                    centre: c2,
                    radius: r2,
                },
            ) => (centre - c2).norm().max((radius - r2).abs()),
            (
                Primitive::Cylinder {
                    point,
                    axis,
                    radius,
                },
                Primitive::Cylinder {
                    point: p2,
                    axis: a2,
                    radius: r2,
                },
            ) => {
                let q = p2 - point;
                let offset = (q - axis * q.dot(&axis)).norm();
                dir(&axis, &a2).max(offset).max((radius - r2).abs())
            }
            (
                Primitive::Cone {
                    apex,
                    axis,
                    half_angle,
                },
                Primitive::Cone {
                    apex: p2,
                    axis: a2,
                    half_angle: t2,
                },
            ) => (apex - p2)
                .norm()
                .max((axis - a2).norm())
                .max((half_angle - t2).abs()),
            _ => return None,
        })
    }
}

/// A primitive together with the grid indices of its supporting points.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeDetection {
    pub primitive: Primitive,
    pub inliers: Vec<usize>,
    pub score: usize,
}

impl ShapeDetection {
    pub fn class(&self) -> QuadricClass {
        self.primitive.class()
    }
}

/// The quadric whose zero set is the primitive's surface.
pub fn primitive_to_quadric(primitive: &Primitive) -> Result<Quadric> {
    primitive.validate()?;
    Ok(match *primitive {
        Primitive::Plane { normal, offset } => Quadric::plane(normal, offset)?,
        Primitive::Sphere { centre, radius } => Quadric::sphere(centre, radius)?,
        Primitive::Cylinder {
            point,
            axis,
            radius,
        } => Quadric::cylinder(point, axis, radius)?,
        Primitive::Cone {
            apex,
            axis,
            half_angle,
        } => Quadric::cone(apex, axis, half_angle)?,
    })
}

/// Closest points of the lines `a + s·da` and `b + t·db` as `(s, t)`.
fn closest_line_parameters(
    a: &Vector3<f64>,
    da: &Vector3<f64>,
    b: &Vector3<f64>,
    db: &Vector3<f64>,
) -> Option<(f64, f64)> {
    let w = a - b;
    let (aa, ab, bb) = (da.dot(da), da.dot(db), db.dot(db));
    let (d, e) = (da.dot(&w), db.dot(&w));
    let denom = aa * bb - ab * ab;
    if denom <= 1e-12 * aa * bb {
        return None;
    }
    Some(((ab * e - bb * d) / denom, (aa * e - ab * d) / denom))
}

/// Plane through `p[0]` with normal `n[0]`.
pub fn plane_from_samples(p: &[Vector3<f64>], n: &[Vector3<f64>]) -> Option<Primitive> {
    let normal = n[0].try_normalize(1e-12)?;
    Some(Primitive::Plane {
        normal,
        offset: normal.dot(&p[0]),
    })
}

/// Sphere whose centre is where the normal lines of two samples meet.
pub fn sphere_from_samples(p: &[Vector3<f64>], n: &[Vector3<f64>]) -> Option<Primitive> {
    let (s, t) = closest_line_parameters(&p[0], &n[0], &p[1], &n[1])?;
    let centre = (p[0] + n[0] * s + p[1] + n[1] * t) * 0.5;
    let radius = 0.5 * ((p[0] - centre).norm() + (p[1] - centre).norm());
    let prim = Primitive::Sphere { centre, radius };
    prim.validate().ok().map(|_| prim)
}

/// Cylinder with axis `n0 × n1` through the meeting point of the two normal
/// lines projected along it.
pub fn cylinder_from_samples(p: &[Vector3<f64>], n: &[Vector3<f64>]) -> Option<Primitive> {
    let axis = n[0].cross(&n[1]).try_normalize(1e-3)?;
    let flat = |v: &Vector3<f64>| v - axis * v.dot(&axis);
    let (a, b) = (flat(&p[0]), flat(&p[1]));
    let (da, db) = (flat(&n[0]), flat(&n[1]));
    let (s, t) = closest_line_parameters(&a, &da, &b, &db)?;
    let point = (a + da * s + b + db * t) * 0.5;
    let radius = 0.5 * ((a - point).norm() + (b - point).norm());
    let prim = Primitive::Cylinder {
        point,
        axis,
        radius,
    };
    prim.validate().ok().map(|_| prim)
}

/// Cone with apex at the meeting point of three tangent planes; the axis is
/// normal to the plane through the unit directions from the apex to the
/// samples.
pub fn cone_from_samples(p: &[Vector3<f64>], n: &[Vector3<f64>]) -> Option<Primitive> {
    let m = Matrix3::from_rows(&[n[0].transpose(), n[1].transpose(), n[2].transpose()]);
    let rhs = Vector3::new(n[0].dot(&p[0]), n[1].dot(&p[1]), n[2].dot(&p[2]));
    let apex = m.lu().solve(&rhs)?;
    let u: Vec<Vector3<f64>> = p[..3]
        .iter()
        .map(|x| (x - apex).try_normalize(1e-12))
        .collect::<Option<_>>()?;
    let mut axis = (u[1] - u[0]).cross(&(u[2] - u[0])).try_normalize(1e-9)?;
    if axis.dot(&(u[0] + u[1] + u[2])) < 0.0 {
        axis = -axis;
    }
    let half_angle = u.iter().map(|d| d.dot(&axis).clamp(-1.0, 1.0).acos()).sum::<f64>() / 3.0;
    let prim = Primitive::Cone {
        apex,
        axis,
        half_angle,
    };
    prim.validate().ok().map(|_| prim)
}

/// Minimal-sample fit for `class` from the first samples of `p`/`n`.
pub fn fit_from_samples(
    class: QuadricClass,
    p: &[Vector3<f64>],
    n: &[Vector3<f64>],
) -> Option<Primitive> {
    match class {
        QuadricClass::Plane => plane_from_samples(p, n),
        QuadricClass::Sphere => sphere_from_samples(p, n),
        QuadricClass::CircularCylinder => cylinder_from_samples(p, n),
        QuadricClass::CircularCone => cone_from_samples(p, n),
        QuadricClass::General => None,
    }
}

/// Number of samples the minimal fit of `class` consumes.
pub fn minimal_samples(class: QuadricClass) -> usize {
    match class {
        QuadricClass::Plane => 1,
        QuadricClass::Sphere | QuadricClass::CircularCylinder => 2,
        QuadricClass::CircularCone => 3,
        QuadricClass::General => 9,
    }
}
