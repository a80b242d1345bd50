use perception::{backproject, estimate_normals, DepthImage, Intrinsics, OrganizedCloud};
use quadric_core::intersect_ray;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::{Result, SceneSpec};

/// Noise-free ray-cast of a frame: metric depth and the index of the
/// quadric hit at each pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Render {
    pub width: usize,
    pub height: usize,
    /// NaN where no surface is hit.
    pub depth: Vec<f64>,
    pub source: Vec<Option<usize>>,
}

pub fn render(spec: &SceneSpec, frame: usize, k: &Intrinsics) -> Render {
    let pose = spec.trajectory[frame];
    let origin = *pose.translation();
    let hits: Vec<(f64, Option<usize>)> = (0..k.width * k.height)
        .into_par_iter()
        .map(|i| {
            let (u, v) = (i % k.width, i / k.width);
            let dir = pose.transform_vector(&k.ray(u as f64, v as f64));
            let mut best = (f64::NAN, None);
            for (l, sq) in spec.quadrics.iter().enumerate() {
                if let Some(t) = intersect_ray(&sq.quadric, &origin, &dir, sq.bounds.as_ref()) {
                    // Rays have unit depth, so `t` is the depth itself.
                    if best.1.is_none() || t < best.0 {
                        best = (t, Some(l));
                    }
                }
            }
            best
        })
        .collect();
    let (depth, source) = hits.into_iter().unzip();
    Render {
        width: k.width,
        height: k.height,
        depth,
        source,
    }
}

/// Rendered depth with additive Gaussian noise of `spec.noise.depth`
/// metres, seeded by the scene seed and frame index.
pub fn render_depth(spec: &SceneSpec, frame: usize, k: &Intrinsics) -> DepthImage {
    let r = render(spec, frame, k);
    let mut metres = r.depth;
    if spec.noise.depth > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(frame as u64 + 1);
        for z in metres.iter_mut() {
            let e: f64 = rng.sample(StandardNormal);
            *z += spec.noise.depth * e;
        }
    }
    DepthImage::from_metres(k.width, k.height, &metres, k.depth_scale)
}

/// Backprojected, normal-annotated cloud of a rendered frame.
pub fn generate_cloud(
    spec: &SceneSpec,
    frame: usize,
    k: &Intrinsics,
    normal_radius: usize,
) -> Result<OrganizedCloud> {
    let cloud = backproject(&render_depth(spec, frame, k), k)?;
    Ok(estimate_normals(&cloud, normal_radius))
}
