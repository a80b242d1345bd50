#![allow(dead_code)]

use nalgebra::Vector3;
use perception::{backproject, estimate_normals, DepthImage, Intrinsics, OrganizedCloud};
use quadric_core::{intersect_ray, LocalBox, Quadric, RigidTransform};

/// A surface to render, optionally clipped to a box in its own frame.
pub struct Surface {
    pub quadric: Quadric,
    pub bounds: Option<LocalBox>,
}

impl Surface {
    pub fn unbounded(quadric: Quadric) -> Self {
        Self { quadric, bounds: None }
    }

    pub fn bounded(quadric: Quadric, bounds: Vector3<f64>) -> Self {
        Self {
            quadric,
            bounds: Some(LocalBox::symmetric(bounds)),
        }
    }
}

pub fn camera() -> Intrinsics {
    Intrinsics::new(200.0, 200.0, 79.5, 59.5, 160, 120, 5000.0).unwrap()
}

/// Noise-free depth image of world-frame surfaces seen from `pose` (camera
/// to world).
pub fn render(surfaces: &[Surface], pose: &RigidTransform, k: &Intrinsics) -> DepthImage {
    let origin = *pose.translation();
    let mut metres = vec![f64::NAN; k.width * k.height];
    for v in 0..k.height {
        for u in 0..k.width {
            let dir = pose.transform_vector(&k.ray(u as f64, v as f64));
            let best = surfaces
                .iter()
                .filter_map(|s| intersect_ray(&s.quadric, &origin, &dir, s.bounds.as_ref()))
                .fold(f64::INFINITY, f64::min);
            // The ray has unit depth, so the parameter is the depth itself.
            if best.is_finite() {
                metres[v * k.width + u] = best;
            }
        }
    }
    DepthImage::from_metres(k.width, k.height, &metres, k.depth_scale)
}

pub fn cloud_with_normals(depth: &DepthImage, k: &Intrinsics) -> OrganizedCloud {
    estimate_normals(&backproject(depth, k).unwrap(), 2)
}

pub fn angle_deg(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.normalize().dot(&b.normalize()).clamp(-1.0, 1.0).acos().to_degrees()
}
