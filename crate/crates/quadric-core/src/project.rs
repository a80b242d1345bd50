use nalgebra::{Vector2, Vector3};

use crate::{Quadric, QuadricClass, QuadricError, Result};

const MAX_NEWTON_ITERATIONS: usize = 50;
const CONSTRAINT_TOLERANCE: f64 = 1e-10;

/// Nearest point on the quadric surface to `p`.
///
/// Planes, spheres, cylinders and cones are projected in closed form. General
/// quadrics solve the Lagrange condition `x = p - λ∇f(x)` for the multiplier
/// with a safeguarded Newton iteration.
pub fn project_point(q: &Quadric, p: &Vector3<f64>) -> Result<Vector3<f64>> {
    let x = q.pose().inverse().transform_point(p);
    let local = match q.class() {
        QuadricClass::Plane => Vector3::new(0.0, x.y, x.z),
        QuadricClass::Sphere => {
            let r = 1.0 / q.scale().alpha;
            let n = x.norm();
            if n < 1e-12 {
                return Err(QuadricError::DegenerateProjection("sphere centre"));
            }
            x * (r / n)
        }
        QuadricClass::CircularCylinder => {
            let r = 1.0 / q.scale().alpha;
            let rho = x.xy().norm();
            if rho < 1e-12 {
                return Err(QuadricError::DegenerateProjection("cylinder axis"));
            }
            Vector3::new(x.x * r / rho, x.y * r / rho, x.z)
        }
        QuadricClass::CircularCone => {
            let rho = x.xy().norm();
            if rho < 1e-12 {
                return Err(QuadricError::DegenerateProjection("cone axis"));
            }
            // Generators in the (radial, axial) half-plane.
            let theta = (1.0 / q.scale().alpha).atan();
            let v = Vector2::new(rho, x.z);
            let up = Vector2::new(theta.sin(), theta.cos());
            let down = Vector2::new(theta.sin(), -theta.cos());
            let (tu, td) = (v.dot(&up).max(0.0), v.dot(&down).max(0.0));
            let w = if tu >= td { up * tu } else { down * td };
            Vector3::new(x.x * w.x / rho, x.y * w.x / rho, w.y)
        }
        QuadricClass::General => project_general(q, &x)?,
    };
    Ok(q.pose().transform_point(&local))
}

fn project_general(q: &Quadric, x: &Vector3<f64>) -> Result<Vector3<f64>> {
    let c4 = q.canonical_scaled();
    let d = [c4.x, c4.y, c4.z];
    let c = c4.w;
    let scale = d.iter().chain(std::iter::once(&c)).fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = CONSTRAINT_TOLERANCE * scale;

    let point = |lambda: f64| Vector3::from_fn(|i, _| x[i] / (1.0 + 2.0 * lambda * d[i]));
    let g = |lambda: f64| -> f64 {
        let y = point(lambda);
        (0..3).map(|i| d[i] * y[i] * y[i]).sum::<f64>() + c
    };
    let dg = |lambda: f64| -> f64 {
        (0..3)
            .map(|i| {
                let den = 1.0 + 2.0 * lambda * d[i];
                -4.0 * d[i] * d[i] * x[i] * x[i] / (den * den * den)
            })
            .sum()
    };

    let g0 = g(0.0);
    if g0.abs() <= tol {
        return Ok(*x);
    }
    // g is strictly decreasing between the poles at λ = -1/(2dᵢ).
    let lo_pole = d
        .iter()
        .filter(|&&di| di > 0.0)
        .map(|&di| -0.5 / di)
        .fold(f64::NEG_INFINITY, f64::max);
    let hi_pole = d
        .iter()
        .filter(|&&di| di < 0.0)
        .map(|&di| -0.5 / di)
        .fold(f64::INFINITY, f64::min);

    let mut bracket = if g0 > 0.0 { (0.0, hi_pole) } else { (lo_pole, 0.0) };
    // Replace an infinite end by a finite point with the right sign.
    if bracket.1.is_infinite() || bracket.0.is_infinite() {
        let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let mut step = 1.0 / dmax;
        let mut found = false;
        for _ in 0..200 {
            let probe = if g0 > 0.0 { step } else { -step };
            let gp = g(probe);
            if (g0 > 0.0 && gp < 0.0) || (g0 < 0.0 && gp > 0.0) {
                if g0 > 0.0 {
                    bracket.1 = probe;
                } else {
                    bracket.0 = probe;
                }
                found = true;
                break;
            }
            step *= 2.0;
        }
        if !found {
            return Err(QuadricError::DegenerateProjection(
                "no finite Lagrange multiplier (point on a symmetry locus)",
            ));
        }
    }
    let (mut a, mut b) = bracket;
    // Strictly inside the open interval when an end is a pole.
    let mut lambda = 0.0;
    let mut residual = g0;
    for _ in 0..MAX_NEWTON_ITERATIONS {
        let slope = dg(lambda);
        let mut next = lambda - residual / slope;
        if !(next > a && next < b) || !next.is_finite() {
            next = 0.5 * (a + b);
        }
        lambda = next;
        residual = g(lambda);
        if residual.abs() <= tol {
            return Ok(point(lambda));
        }
        if residual > 0.0 {
            a = lambda;
        } else {
            b = lambda;
        }
    }
    if residual.is_finite() && residual.abs() <= tol {
        Ok(point(lambda))
    } else {
        Err(QuadricError::ProjectionNotConverged(residual.abs()))
    }
}
