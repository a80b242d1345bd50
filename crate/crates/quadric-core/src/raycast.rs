use nalgebra::Vector3;

use crate::Quadric;

/// Axis-aligned box in a quadric's own frame, used to clip unbounded
/// surfaces to finite patches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalBox {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl LocalBox {
    /// The box `|x_i| ≤ half_extent_i`.
    pub fn symmetric(half_extent: Vector3<f64>) -> Self {
        Self {
            min: -half_extent,
            max: half_extent,
        }
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

/// Nearest ray parameter `t > 0` at which `origin + t·direction` meets the
/// surface. With `bounds`, only hits inside the quadric-frame box count.
pub fn intersect_ray(
    q: &Quadric,
    origin: &Vector3<f64>,
    direction: &Vector3<f64>,
    bounds: Option<&LocalBox>,
) -> Option<f64> {
    let inv = q.pose().inverse();
    let o = inv.transform_point(origin);
    let d = inv.transform_vector(direction);
    let k = q.canonical_scaled();
    let a = k[0] * d.x * d.x + k[1] * d.y * d.y + k[2] * d.z * d.z;
    let b = 2.0 * (k[0] * o.x * d.x + k[1] * o.y * d.y + k[2] * o.z * d.z);
    let c = k[0] * o.x * o.x + k[1] * o.y * o.y + k[2] * o.z * o.z + k[3];

    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return None;
    }
    let mut roots = [f64::NAN; 2];
    if a.abs() <= 1e-14 * scale {
        if b.abs() <= 1e-14 * scale {
            return None;
        }
        roots[0] = -c / b;
    } else {
        let mut disc = b * b - 4.0 * a * c;
        // Planes give an exact double root; rounding noise in the
        // discriminant would otherwise cost half the digits or the hit.
        if disc.abs() <= 1e-12 * (b * b).max((4.0 * a * c).abs()) {
            disc = 0.0;
        }
        if disc < 0.0 {
            return None;
        }
        // Numerically stable pair of roots.
        let s = -0.5 * (b + b.signum() * disc.sqrt());
        roots = [s / a, if s != 0.0 { c / s } else { -b / a }];
        if roots[0] > roots[1] {
            roots.swap(0, 1);
        }
    }
    const MIN_T: f64 = 1e-9;
    roots.into_iter().find(|&t| {
        t.is_finite()
            && t > MIN_T
            && bounds.is_none_or(|bnd| bnd.contains(&(o + d * t)))
    })
}
