use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;

use crate::{DepthImage, Intrinsics, PerceptionError, Result};

/// Neighbours whose depth differs from the centre by more than this fraction
/// of the centre depth are treated as lying across a discontinuity.
pub const DEPTH_JUMP_RATIO: f64 = 0.05;

/// Fewest valid neighbours for a normal estimate.
pub const MIN_NORMAL_NEIGHBOURS: usize = 6;

/// Normals viewed more obliquely than this (degrees) are discarded: near
/// silhouettes the window only covers one side of the surface and the
/// estimate is biased.
pub const MAX_NORMAL_INCIDENCE_DEG: f64 = 75.0;

/// Camera-frame points on the pixel grid, with optional unit normals facing
/// the camera.
#[derive(Debug, Clone, PartialEq)]
pub struct OrganizedCloud {
    pub intrinsics: Intrinsics,
    pub points: Vec<Option<Vector3<f64>>>,
    pub normals: Vec<Option<Vector3<f64>>>,
}

impl OrganizedCloud {
    pub fn empty(intrinsics: Intrinsics) -> Self {
        let n = intrinsics.width * intrinsics.height;
        Self {
            intrinsics,
            points: vec![None; n],
            normals: vec![None; n],
        }
    }

    pub fn width(&self) -> usize {
        self.intrinsics.width
    }

    pub fn height(&self) -> usize {
        self.intrinsics.height
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index(&self, u: usize, v: usize) -> usize {
        v * self.width() + u
    }

    pub fn pixel(&self, index: usize) -> (usize, usize) {
        (index % self.width(), index / self.width())
    }

    pub fn point(&self, index: usize) -> Option<&Vector3<f64>> {
        self.points[index].as_ref()
    }

    pub fn normal(&self, index: usize) -> Option<&Vector3<f64>> {
        self.normals[index].as_ref()
    }

    pub fn valid_points(&self) -> usize {
        self.points.iter().filter(|p| p.is_some()).count()
    }

    /// Indices having both a point and a normal.
    pub fn oriented_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.points[i].is_some() && self.normals[i].is_some())
            .collect()
    }
}

/// Lift every pixel with positive depth to `((u−cx)·z/fx, (v−cy)·z/fy, z)`.
pub fn backproject(depth: &DepthImage, k: &Intrinsics) -> Result<OrganizedCloud> {
    if (depth.width, depth.height) != (k.width, k.height) {
        return Err(PerceptionError::DimensionMismatch {
            expected: (k.width, k.height),
            got: (depth.width, depth.height),
        });
    }
    let mut cloud = OrganizedCloud::empty(*k);
    cloud
        .points
        .par_chunks_mut(k.width)
        .enumerate()
        .for_each(|(v, row)| {
            for (u, slot) in row.iter_mut().enumerate() {
                let d = depth.get(u, v);
                if d > 0.0 && d.is_finite() {
                    let z = d / k.depth_scale;
                    *slot = Some(k.ray(u as f64, v as f64) * z);
                }
            }
        });
    Ok(cloud)
}

/// Normals from the smallest principal direction of each pixel's
/// `(2r+1)²` window, flipped to face the camera. Pixels with too few
/// neighbours on the same side of a depth discontinuity, or seen at grazing
/// incidence, get no normal.
pub fn estimate_normals(cloud: &OrganizedCloud, radius_px: usize) -> OrganizedCloud {
    let (w, h) = (cloud.width(), cloud.height());
    let r = radius_px as isize;
    let min_facing = MAX_NORMAL_INCIDENCE_DEG.to_radians().cos();
    let mut normals = vec![None; cloud.len()];
    normals.par_chunks_mut(w).enumerate().for_each(|(v, row)| {
        for (u, slot) in row.iter_mut().enumerate() {
            let Some(centre) = cloud.points[v * w + u] else {
                continue;
            };
            let limit = DEPTH_JUMP_RATIO * centre.z;
            let mut count = 0usize;
            let mut sum = Vector3::zeros();
            let mut outer = Matrix3::zeros();
            for dv in -r..=r {
                let vv = v as isize + dv;
                if vv < 0 || vv >= h as isize {
                    continue;
                }
                for du in -r..=r {
                    let uu = u as isize + du;
                    if uu < 0 || uu >= w as isize {
                        continue;
                    }
                    let Some(p) = cloud.points[vv as usize * w + uu as usize] else {
                        continue;
                    };
                    if (p.z - centre.z).abs() > limit {
                        continue;
                    }
                    // Centring on the pixel keeps the sums well conditioned.
                    let d = p - centre;
                    count += 1;
                    sum += d;
                    outer += d * d.transpose();
                }
            }
            // The centre itself is counted above.
            if count < MIN_NORMAL_NEIGHBOURS + 1 {
                continue;
            }
            let n = count as f64;
            let mean = sum / n;
            let cov = outer / n - mean * mean.transpose();
            let eig = SymmetricEigen::new(cov);
            let (imin, _) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, &e)| if e < acc.1 { (i, e) } else { acc });
            let mut normal: Vector3<f64> = eig.eigenvectors.column(imin).into_owned();
            let norm = normal.norm();
            if !(norm > 0.0) {
                continue;
            }
            normal /= norm;
            let facing = normal.dot(&centre) / centre.norm();
            if facing.abs() < min_facing {
                continue;
            }
            if facing > 0.0 {
                normal = -normal;
            }
            *slot = Some(normal);
        }
    });
    OrganizedCloud {
        intrinsics: cloud.intrinsics,
        points: cloud.points.clone(),
        normals,
    }
}
