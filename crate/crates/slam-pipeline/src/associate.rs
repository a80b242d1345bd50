use quadric_core::{boxminus, Quadric, RigidTransform};

use crate::{Landmark, PipelineConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Association {
    /// Index into the landmark list.
    Landmark(usize),
    New,
}

/// σ-weighted squared error between a sensor-frame detection and a world
/// landmark seen from `pose`; `None` when the classes differ.
pub fn association_cost(
    detection: &Quadric,
    landmark: &Quadric,
    pose: &RigidTransform,
    sigma: f64,
) -> Option<f64> {
    if detection.class() != landmark.class() || detection.signature() != landmark.signature() {
        return None;
    }
    let predicted = landmark.expressed_in(pose);
    let e = boxminus(&predicted, detection).ok()?;
    Some(e.coords().norm_squared() / (sigma * sigma))
}

/// Matches each detection to the cheapest same-class landmark under the
/// gate, one-to-one, committing pairs in ascending cost order.
pub fn associate(
    detections: &[Quadric],
    landmarks: &[Landmark],
    predicted_pose: &RigidTransform,
    config: &PipelineConfig,
) -> Vec<Association> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (d, det) in detections.iter().enumerate() {
        let sigma = config.observation_noise.sigma(det.class());
        for (l, lm) in landmarks.iter().enumerate() {
            if let Some(c) = association_cost(det, &lm.quadric, predicted_pose, sigma) {
                if c < config.association_threshold {
                    pairs.push((c, d, l));
                }
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = vec![Association::New; detections.len()];
    let mut taken = vec![false; landmarks.len()];
    for (_, d, l) in pairs {
        if out[d] == Association::New && !taken[l] {
            out[d] = Association::Landmark(l);
            taken[l] = true;
        }
    }
    out
}
