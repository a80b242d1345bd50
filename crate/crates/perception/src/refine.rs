//! Least-squares refinement of primitives on their inlier points, minimising
//! geometric distance.

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen, Vector3};

use crate::shapes::Primitive;

/// Refinement uses at most this many points, taken at an even stride.
const MAX_POINTS: usize = 4000;

pub fn refine(primitive: &Primitive, points: &[Vector3<f64>]) -> Option<Primitive> {
    if points.len() < 8 {
        return None;
    }
    let stride = points.len().div_ceil(MAX_POINTS);
    let pts: Vec<Vector3<f64>> = points.iter().step_by(stride).copied().collect();
    let refined = match *primitive {
        Primitive::Plane { normal, .. } => fit_plane(&pts, &normal),
        Primitive::Sphere { centre, radius } => {
            let x = levenberg_marquardt(
                DVector::from_row_slice(&[centre.x, centre.y, centre.z, radius]),
                |x| {
                    let c = Vector3::new(x[0], x[1], x[2]);
                    DVector::from_iterator(pts.len(), pts.iter().map(|p| (p - c).norm() - x[3]))
                },
            );
            Some(Primitive::Sphere {
                centre: Vector3::new(x[0], x[1], x[2]),
                radius: x[3].abs(),
            })
        }
        Primitive::Cylinder {
            point,
            axis,
            radius,
        } => {
            let (b1, b2) = basis(&axis);
            let build = |x: &DVector<f64>| {
                let a = (axis + b1 * x[0] + b2 * x[1]).normalize();
                Primitive::Cylinder {
                    point: point + b1 * x[2] + b2 * x[3],
                    axis: a,
                    radius: x[4],
                }
            };
            let x = levenberg_marquardt(DVector::from_row_slice(&[0.0, 0.0, 0.0, 0.0, radius]), |x| {
                let c = build(x);
                DVector::from_iterator(pts.len(), pts.iter().map(|p| c.signed_distance(p)))
            });
            let Primitive::Cylinder { point, axis, radius } = build(&x) else {
                unreachable!()
            };
            // Keep the axis point near the data.
            let centroid = pts.iter().sum::<Vector3<f64>>() / pts.len() as f64;
            let point = point + axis * (centroid - point).dot(&axis);
            Some(Primitive::Cylinder {
                point,
                axis,
                radius: radius.abs(),
            })
        }
        Primitive::Cone {
            apex,
            axis,
            half_angle,
        } => {
            let (b1, b2) = basis(&axis);
            let build = |x: &DVector<f64>| Primitive::Cone {
                apex: apex + Vector3::new(x[0], x[1], x[2]),
                axis: (axis + b1 * x[3] + b2 * x[4]).normalize(),
                half_angle: x[5],
            };
            let x = levenberg_marquardt(
                DVector::from_row_slice(&[0.0, 0.0, 0.0, 0.0, 0.0, half_angle]),
                |x| {
                    let c = build(x);
                    DVector::from_iterator(pts.len(), pts.iter().map(|p| c.signed_distance(p)))
                },
            );
            Some(build(&x))
        }
    }?;
    refined.validate().ok().map(|_| refined)
}

/// Total-least-squares plane, normal oriented like `hint`.
fn fit_plane(pts: &[Vector3<f64>], hint: &Vector3<f64>) -> Option<Primitive> {
    let n = pts.len() as f64;
    let centroid = pts.iter().sum::<Vector3<f64>>() / n;
    let cov = pts
        .iter()
        .map(|p| (p - centroid) * (p - centroid).transpose())
        .sum::<Matrix3<f64>>()
        / n;
    let eig = SymmetricEigen::new(cov);
    let imin = eig.eigenvalues.imin();
    let mut normal: Vector3<f64> = eig.eigenvectors.column(imin).into_owned().try_normalize(1e-12)?;
    if normal.dot(hint) < 0.0 {
        normal = -normal;
    }
    Some(Primitive::Plane {
        normal,
        offset: normal.dot(&centroid),
    })
}

fn basis(axis: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if axis.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let b1 = axis.cross(&helper).normalize();
    (b1, axis.cross(&b1))
}

/// Damped Gauss-Newton with central-difference Jacobians.
fn levenberg_marquardt(
    mut x: DVector<f64>,
    residual: impl Fn(&DVector<f64>) -> DVector<f64>,
) -> DVector<f64> {
    const STEP: f64 = 1e-7;
    let mut r = residual(&x);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-4;
    for _ in 0..60 {
        let mut j = DMatrix::zeros(r.len(), x.len());
        for c in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[c] += STEP;
            xm[c] -= STEP;
            j.set_column(c, &((residual(&xp) - residual(&xm)) / (2.0 * STEP)));
        }
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        let mut improved = false;
        for _ in 0..10 {
            let mut a = jtj.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                lambda *= 10.0;
                continue;
            };
            let xn = &x + &step;
            let rn = residual(&xn);
            let cn = rn.norm_squared();
            if cn.is_finite() && cn < cost {
                let done = step.norm() < 1e-12 || (cost - cn) <= 1e-14 * cost;
                x = xn;
                r = rn;
                cost = cn;
                lambda = (lambda * 0.1).max(1e-12);
                improved = !done;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    x
}
