use nalgebra::{DVector, Vector6};
use quadric_core::{boxplus, Quadric, QuadricClass, RigidTransform, TangentVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Result, SceneSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFrame {
    /// Noisy motion from the previous camera (current camera in the
    /// previous camera frame); `None` for the first frame.
    pub odometry: Option<RigidTransform>,
    /// `(landmark index, noisy sensor-frame measurement)` for each visible
    /// landmark.
    pub observations: Vec<(usize, Quadric)>,
}

/// Gaussian perturbation in a class's reduced coordinates.
pub fn observation_noise<R: Rng + ?Sized>(rng: &mut R, class: QuadricClass, sigma: f64) -> TangentVector {
    let v: Vec<f64> = (0..class.dof())
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    TangentVector::new(DVector::from_vec(v))
}

/// Gaussian twist with independent translation and rotation σ.
pub fn odometry_noise<R: Rng + ?Sized>(rng: &mut R, sigma_t: f64, sigma_r: f64) -> Vector6<f64> {
    Vector6::from_fn(|i, _| {
        let s = if i < 3 { sigma_t } else { sigma_r };
        s * rng.sample::<f64, _>(StandardNormal)
    })
}

/// Noisy odometry and observations for every frame, all drawn from one
/// generator seeded with `spec.seed`.
pub fn generate_observations(spec: &SceneSpec) -> Result<Vec<SyntheticFrame>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = &spec.noise;
    let mut frames = Vec::with_capacity(spec.trajectory.len());
    for (k, pose) in spec.trajectory.iter().enumerate() {
        let odometry = (k > 0).then(|| {
            let truth = spec.trajectory[k - 1].inverse() * *pose;
            truth.retract(&odometry_noise(&mut rng, n.odometry_t, n.odometry_r))
        });
        let mut observations = Vec::new();
        for (l, sq) in spec.quadrics.iter().enumerate() {
            if !spec.is_visible(k, l) {
                continue;
            }
            let exact = sq.quadric.expressed_in(pose);
            let nu = observation_noise(&mut rng, exact.class(), n.observation);
            observations.push((l, boxplus(&exact, &nu)?));
        }
        frames.push(SyntheticFrame {
            odometry,
            observations,
        });
    }
    Ok(frames)
}

/// Camera poses obtained by chaining the odometry from the true first pose.
pub fn dead_reckoning(first: &RigidTransform, frames: &[SyntheticFrame]) -> Vec<RigidTransform> {
    let mut poses = Vec::with_capacity(frames.len());
    let mut pose = *first;
    for f in frames {
        if let Some(o) = f.odometry {
            pose = pose * o;
        }
        poses.push(pose);
    }
    poses
}
