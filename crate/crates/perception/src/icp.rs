//! Frame-to-frame point-to-plane ICP with projective association.
//!
//! The returned transform maps points of the current frame into the previous
//! frame, `p_prev = T·p_curr`, i.e. it is the current camera pose expressed in
//! the previous camera frame.

use nalgebra::{Matrix6, Vector3, Vector6};
use quadric_core::{se3, RigidTransform};
use rayon::prelude::*;

use crate::{OrganizedCloud, PerceptionError, Result};

const CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpParams {
    pub max_iterations: usize,
    /// Correspondences further apart than this (metres) are rejected.
    pub max_distance: f64,
    /// Correspondences whose normals disagree by more than this (radians) are
    /// rejected.
    pub max_normal_angle: f64,
    pub min_correspondences: usize,
    /// Use every `stride`-th pixel of the current frame in each direction.
    pub stride: usize,
    /// Stop once the update twist is smaller than this.
    pub tolerance: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            max_iterations: 30,
            max_distance: 0.1,
            max_normal_angle: 30f64.to_radians(),
            min_correspondences: 100,
            stride: 1,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpResult {
    /// Current frame to previous frame.
    pub transform: RigidTransform,
    /// Fraction of sampled current points with an accepted correspondence.
    pub fitness: f64,
    pub correspondences: usize,
    pub iterations: usize,
}

pub fn icp_point_to_plane(
    prev: &OrganizedCloud,
    curr: &OrganizedCloud,
    init: &RigidTransform,
    params: &IcpParams,
) -> Result<IcpResult> {
    let stride = params.stride.max(1);
    let samples: Vec<(Vector3<f64>, Vector3<f64>)> = (0..curr.height())
        .step_by(stride)
        .flat_map(|v| (0..curr.width()).step_by(stride).map(move |u| (u, v)))
        .filter_map(|(u, v)| {
            let i = curr.index(u, v);
            Some((*curr.point(i)?, *curr.normal(i)?))
        })
        .collect();
    let cos_limit = params.max_normal_angle.cos();

    let mut t = *init;
    let mut last = (0, 0.0);
    let mut iterations = 0;
    for _ in 0..params.max_iterations {
        iterations += 1;
        // Fixed chunks summed in order keep the result independent of the
        // thread schedule.
        let partials: Vec<(Matrix6<f64>, Vector6<f64>, usize)> = samples
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut acc = (Matrix6::zeros(), Vector6::zeros(), 0usize);
                for (p, n) in chunk {
                    if let Some((row, e)) = correspondence(prev, &t, p, n, params, cos_limit) {
                        acc.0 += row * row.transpose();
                        acc.1 += row * e;
                        acc.2 += 1;
                    }
                }
                acc
            })
            .collect();
        let (h, g, count) = partials
            .into_iter()
            .fold((Matrix6::zeros(), Vector6::zeros(), 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
        last = (count, count as f64 / samples.len().max(1) as f64);
        if count < params.min_correspondences {
            return Err(PerceptionError::InsufficientOverlap {
                correspondences: count,
            });
        }
        let Some(chol) = h.cholesky() else {
            return Err(PerceptionError::InsufficientOverlap {
                correspondences: count,
            });
        };
        let xi = chol.solve(&(-g));
        // Left update: the linearisation perturbs the transformed point.
        t = (se3::exp(&xi) * t).renormalized();
        if xi.norm() < params.tolerance {
            break;
        }
    }
    Ok(IcpResult {
        transform: t,
        fitness: last.1,
        correspondences: last.0,
        iterations,
    })
}

/// Jacobian row and point-to-plane error for one current-frame sample.
fn correspondence(
    prev: &OrganizedCloud,
    t: &RigidTransform,
    p: &Vector3<f64>,
    n: &Vector3<f64>,
    params: &IcpParams,
    cos_limit: f64,
) -> Option<(Vector6<f64>, f64)> {
    let q_cur = t.transform_point(p);
    let (u, v) = prev.intrinsics.pixel(&q_cur)?;
    let i = prev.index(u, v);
    let q = prev.point(i)?;
    let nq = prev.normal(i)?;
    if (q_cur - q).norm() > params.max_distance {
        return None;
    }
    if t.transform_vector(n).dot(nq) < cos_limit {
        return None;
    }
    let e = nq.dot(&(q_cur - q));
    let c = q_cur.cross(nq);
    Some((Vector6::new(nq.x, nq.y, nq.z, c.x, c.y, c.z), e))
}
