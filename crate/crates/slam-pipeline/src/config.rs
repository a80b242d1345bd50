use std::path::Path;

use factor_graph::{Huber, SolveOptions};
use perception::keyvalue::{get_or, read_key_values, KeyValues};
use perception::{DetectionParams, IcpParams, Intrinsics};
use quadric_core::QuadricClass;

use crate::{PipelineError, Result};

/// Observation standard deviation per landmark class, applied isotropically
/// in the class's reduced coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationNoise {
    pub plane: f64,
    pub sphere: f64,
    pub cylinder: f64,
    pub cone: f64,
    pub general: f64,
}

impl ObservationNoise {
    pub fn uniform(sigma: f64) -> Self {
        Self {
            plane: sigma,
            sphere: sigma,
            cylinder: sigma,
            cone: sigma,
            general: sigma,
        }
    }

    pub fn sigma(&self, class: QuadricClass) -> f64 {
        match class {
            QuadricClass::Plane => self.plane,
            QuadricClass::Sphere => self.sphere,
            QuadricClass::CircularCylinder => self.cylinder,
            QuadricClass::CircularCone => self.cone,
            QuadricClass::General => self.general,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Observations needed before a landmark enters the graph.
    pub promotion_threshold: usize,
    /// Gate on the σ-weighted squared association error.
    pub association_threshold: f64,
    pub observation_noise: ObservationNoise,
    /// Odometry translation σ (metres).
    pub odometry_sigma_t: f64,
    /// Odometry rotation σ (radians).
    pub odometry_sigma_r: f64,
    /// Odometry σ multiplier for frames whose ICP failed.
    pub dropped_frame_inflation: f64,
    /// σ of the prior anchoring the first pose.
    pub prior_sigma: f64,
    pub huber: Option<Huber>,
    pub intrinsics: Intrinsics,
    pub normal_radius: usize,
    pub detection: DetectionParams,
    pub icp: IcpParams,
    pub solver: SolveOptions,
    /// Points kept per landmark per frame for reconstruction.
    pub archive_points: usize,
    /// Frames of inlier points kept per landmark.
    pub archive_window: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            promotion_threshold: 5,
            association_threshold: 9.0,
            observation_noise: ObservationNoise::uniform(0.05),
            odometry_sigma_t: 0.01,
            odometry_sigma_r: 0.5f64.to_radians(),
            dropped_frame_inflation: 100.0,
            prior_sigma: 1e-4,
            huber: None,
            intrinsics: Intrinsics::tum_freiburg2(),
            normal_radius: 2,
            detection: DetectionParams::default(),
            icp: IcpParams::default(),
            solver: SolveOptions::default(),
            archive_points: 2000,
            archive_window: 30,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    /// Overrides defaults with any keys present in `map`; angles are given
    /// in degrees.
    pub fn from_key_values(map: &KeyValues) -> Result<Self> {
        let d = Self::default();
        let dd = &d.detection;
        let di = &d.icp;
        let obs = get_or(map, "obs_sigma", f64::NAN)?;
        let base = if obs.is_nan() {
            d.observation_noise
        } else {
            ObservationNoise::uniform(obs)
        };
        let huber: f64 = get_or(map, "huber", 0.0)?;
        let cfg = Self {
            promotion_threshold: get_or(map, "promotion_threshold", d.promotion_threshold)?,
            association_threshold: get_or(map, "association_threshold", d.association_threshold)?,
            observation_noise: ObservationNoise {
                plane: get_or(map, "obs_sigma_plane", base.plane)?,
                sphere: get_or(map, "obs_sigma_sphere", base.sphere)?,
                cylinder: get_or(map, "obs_sigma_cylinder", base.cylinder)?,
                cone: get_or(map, "obs_sigma_cone", base.cone)?,
                general: get_or(map, "obs_sigma_general", base.general)?,
            },
            odometry_sigma_t: get_or(map, "odom_sigma_t", d.odometry_sigma_t)?,
            odometry_sigma_r: get_or(map, "odom_sigma_r_deg", d.odometry_sigma_r.to_degrees())?
                .to_radians(),
            dropped_frame_inflation: get_or(map, "dropped_frame_inflation", d.dropped_frame_inflation)?,
            prior_sigma: get_or(map, "prior_sigma", d.prior_sigma)?,
            huber: (huber > 0.0).then_some(Huber { threshold: huber }),
            intrinsics: Intrinsics::from_key_values(map, d.intrinsics)?,
            normal_radius: get_or(map, "normal_radius", d.normal_radius)?,
            detection: DetectionParams {
                epsilon: get_or(map, "ransac_epsilon", dd.epsilon)?,
                normal_threshold: get_or(map, "ransac_normal_deg", dd.normal_threshold.to_degrees())?
                    .to_radians(),
                min_inliers: get_or(map, "ransac_min_inliers", dd.min_inliers)?,
                probability: get_or(map, "ransac_probability", dd.probability)?,
                batch_size: get_or(map, "ransac_batch", dd.batch_size)?,
                max_samples: get_or(map, "ransac_max_samples", dd.max_samples)?,
                max_radius: get_or(map, "ransac_max_radius", dd.max_radius)?,
                ..dd.clone()
            },
            icp: IcpParams {
                max_iterations: get_or(map, "icp_max_iterations", di.max_iterations)?,
                max_distance: get_or(map, "icp_max_distance", di.max_distance)?,
                max_normal_angle: get_or(map, "icp_max_normal_deg", di.max_normal_angle.to_degrees())?
                    .to_radians(),
                min_correspondences: get_or(map, "icp_min_correspondences", di.min_correspondences)?,
                stride: get_or(map, "icp_stride", di.stride)?,
                ..*di
            },
            solver: SolveOptions {
                max_iterations: get_or(map, "solver_max_iterations", d.solver.max_iterations)?,
                ..d.solver
            },
            archive_points: get_or(map, "archive_points", d.archive_points)?,
            archive_window: get_or(map, "archive_window", d.archive_window)?,
            seed: get_or(map, "seed", d.seed)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_key_values(&read_key_values(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        if self.promotion_threshold < 1 {
            return bad("promotion_threshold must be at least 1");
        }
        let n = &self.observation_noise;
        let positive = [
            self.association_threshold,
            n.plane,
            n.sphere,
            n.cylinder,
            n.cone,
            n.general,
            self.odometry_sigma_t,
            self.odometry_sigma_r,
            self.prior_sigma,
            self.dropped_frame_inflation,
            self.detection.epsilon,
            self.detection.normal_threshold,
            self.detection.probability,
            self.icp.max_distance,
            self.icp.max_normal_angle,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("thresholds and noise levels must be positive");
        }
        if self.archive_window == 0 {
            return bad("archive_window must be at least 1");
        }
        Ok(())
    }
}
