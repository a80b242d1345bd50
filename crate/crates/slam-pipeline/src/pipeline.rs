use std::time::Instant;

use factor_graph::{solve, Factor, FactorGraph, GraphEstimate, SolveReport};
use nalgebra::{DMatrix, DVector, Vector3};
use perception::dataset::ColorImage;
use perception::{
    backproject, detect_shapes, estimate_normals, icp_point_to_plane, primitive_to_quadric,
    DepthImage, DetectionParams, OrganizedCloud, PerceptionError,
};
use quadric_core::{Quadric, RigidTransform};

use crate::associate::{associate, Association};
use crate::landmark::{ArchiveEntry, Landmark};
use crate::{PipelineConfig, Result};

/// Per-frame wall-clock time (milliseconds) of the main stages.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FrameTimings {
    pub normals: f64,
    pub segmentation: f64,
    pub association: f64,
    pub optimisation: f64,
    pub odometry: f64,
}

/// A quadric measured in the sensor frame with the points that support it.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub quadric: Quadric,
    pub points: Vec<Vector3<f64>>,
    pub colors: Vec<[u8; 3]>,
}

impl Observation {
    pub fn bare(quadric: Quadric) -> Self {
        Self {
            quadric,
            points: Vec::new(),
            colors: Vec::new(),
        }
    }
}

pub struct FrameInput {
    pub timestamp: f64,
    pub depth: DepthImage,
    pub rgb: Option<ColorImage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub timestamp: f64,
    /// Odometry was replaced by a constant-velocity prediction.
    pub dropped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub index: usize,
    pub pose: RigidTransform,
    pub dropped: bool,
    pub associations: Vec<Association>,
    /// Ids of landmarks promoted in this frame.
    pub promoted: Vec<usize>,
    pub solve: SolveReport,
    pub timings: FrameTimings,
}

/// Incremental quadric SLAM with a full batch solve after every frame.
pub struct Pipeline {
    config: PipelineConfig,
    graph: FactorGraph,
    estimate: GraphEstimate,
    landmarks: Vec<Landmark>,
    frames: Vec<FrameRecord>,
    timings: Vec<FrameTimings>,
    previous_cloud: Option<OrganizedCloud>,
    last_motion: RigidTransform,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            graph: FactorGraph::new(),
            estimate: GraphEstimate::new(),
            landmarks: Vec::new(),
            frames: Vec::new(),
            timings: Vec::new(),
            previous_cloud: None,
            last_motion: RigidTransform::identity(),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn graph(&self) -> &FactorGraph {
        &self.graph
    }

    pub fn estimate(&self) -> &GraphEstimate {
        &self.estimate
    }

    pub fn landmarks(&self) -> &[Landmark] {
        &self.landmarks
    }

    pub fn promoted_landmarks(&self) -> impl Iterator<Item = &Landmark> {
        self.landmarks.iter().filter(|l| !l.is_pending())
    }

    pub fn frames(&self) -> &[FrameRecord] {
        &self.frames
    }

    pub fn timings(&self) -> &[FrameTimings] {
        &self.timings
    }

    /// Estimated camera-to-world pose of every frame with its timestamp.
    pub fn trajectory(&self) -> Vec<(f64, RigidTransform)> {
        self.frames
            .iter()
            .enumerate()
            .map(|(i, f)| (f.timestamp, *self.estimate.pose(i).expect("pose per frame")))
            .collect()
    }

    /// Depth frame through the whole front-end and back-end.
    pub fn integrate_frame(&mut self, frame: &FrameInput) -> Result<FrameResult> {
        let cfg = &self.config;
        let t = Instant::now();
        let cloud = estimate_normals(&backproject(&frame.depth, &cfg.intrinsics)?, cfg.normal_radius);
        let normals = ms(t);

        let t = Instant::now();
        let odometry = match &self.previous_cloud {
            None => None,
            Some(prev) => match icp_point_to_plane(prev, &cloud, &self.last_motion, &cfg.icp) {
                Ok(res) => Some(res.transform),
                Err(e) => {
                    log::warn!("frame {}: odometry failed ({e}); assuming constant velocity", self.frames.len());
                    None
                }
            },
        };
        let odometry_ms = ms(t);

        let t = Instant::now();
        let params = DetectionParams {
            seed: cfg.seed.wrapping_add(self.frames.len() as u64),
            ..cfg.detection.clone()
        };
        let detections = match detect_shapes(&cloud, &params) {
            Ok(d) => d,
            Err(PerceptionError::EmptyCloud) => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        let mut observations = Vec::with_capacity(detections.len());
        for det in &detections {
            let points = det.inliers.iter().map(|&i| cloud.points[i].expect("inlier point")).collect();
            let colors = match &frame.rgb {
                Some(img) if img.width == cloud.width() && img.height == cloud.height() => {
                    det.inliers.iter().map(|&i| img.pixels[i]).collect()
                }
                _ => Vec::new(),
            };
            observations.push(Observation {
                quadric: primitive_to_quadric(&det.primitive)?,
                points,
                colors,
            });
        }
        let segmentation = ms(t);

        let first = self.previous_cloud.is_none();
        self.previous_cloud = Some(cloud);
        let mut result = self.integrate(frame.timestamp, odometry, !first && odometry.is_none(), observations)?;
        result.timings.normals = normals;
        result.timings.segmentation = segmentation;
        result.timings.odometry = odometry_ms;
        *self.timings.last_mut().expect("timing per frame") = result.timings;
        Ok(result)
    }

    /// Adds a frame from precomputed odometry (current camera in the previous
    /// camera frame) and sensor-frame observations. `None` odometry on a
    /// later frame is treated as a dropped frame.
    pub fn integrate_observations(
        &mut self,
        timestamp: f64,
        odometry: Option<RigidTransform>,
        observations: Vec<Observation>,
    ) -> Result<FrameResult> {
        let dropped = !self.frames.is_empty() && odometry.is_none();
        self.integrate(timestamp, odometry, dropped, observations)
    }

    fn integrate(
        &mut self,
        timestamp: f64,
        odometry: Option<RigidTransform>,
        dropped: bool,
        observations: Vec<Observation>,
    ) -> Result<FrameResult> {
        let cfg = self.config.clone();
        let k = self.frames.len();
        let mut timings = FrameTimings::default();

        let predicted = if k == 0 {
            let pose = RigidTransform::identity();
            self.graph.add(Factor::isotropic(
                factor_graph::Measurement::Prior { pose: 0, value: pose },
                cfg.prior_sigma,
            )?);
            pose
        } else {
            let motion = odometry.unwrap_or(self.last_motion);
            self.last_motion = motion;
            let inflation = if dropped { cfg.dropped_frame_inflation } else { 1.0 };
            let cov = odometry_covariance(&cfg, inflation);
            self.graph.add(Factor::odometry(k - 1, k, motion, cov)?);
            *self.estimate.pose(k - 1).expect("previous pose") * motion
        };
        self.estimate.insert_pose(k, predicted);
        self.frames.push(FrameRecord { timestamp, dropped });

        let t = Instant::now();
        let detections: Vec<Quadric> = observations.iter().map(|o| o.quadric).collect();
        let associations = associate(&detections, &self.landmarks, &predicted, &cfg);
        let mut promoted = Vec::new();
        for (obs, assoc) in observations.into_iter().zip(&associations) {
            let l = match *assoc {
                Association::Landmark(l) => {
                    let lm = &mut self.landmarks[l];
                    lm.observation_count += 1;
                    if lm.is_pending() {
                        lm.buffered.push((k, obs.quadric));
                        lm.quadric = obs.quadric.to_world(&predicted);
                    } else {
                        let cov = observation_covariance(&cfg, &obs.quadric);
                        self.graph
                            .add(Factor::observation(k, lm.id, obs.quadric, cov)?.with_robust(cfg.huber));
                    }
                    l
                }
                Association::New => {
                    let id = self.landmarks.len();
                    self.landmarks.push(Landmark::new(id, k, obs.quadric, &predicted));
                    id
                }
            };
            let lm = &mut self.landmarks[l];
            if lm.is_pending() && lm.observation_count >= cfg.promotion_threshold {
                self.estimate.insert_quadric(lm.id, lm.quadric);
                for (frame, q) in &lm.buffered {
                    let cov = observation_covariance(&cfg, q);
                    self.graph
                        .add(Factor::observation(*frame, lm.id, *q, cov)?.with_robust(cfg.huber));
                }
                lm.mark_promoted();
                promoted.push(lm.id);
            }
            if !obs.points.is_empty() {
                lm.archive_points(
                    ArchiveEntry {
                        frame: k,
                        points: obs.points,
                        colors: obs.colors,
                    },
                    cfg.archive_points,
                    cfg.archive_window,
                );
            }
        }
        timings.association = ms(t);

        let t = Instant::now();
        let (estimate, report) = solve(&self.graph, &self.estimate, &cfg.solver)?;
        self.estimate = estimate;
        for lm in self.landmarks.iter_mut().filter(|l| !l.is_pending()) {
            lm.quadric = *self.estimate.quadric(lm.id).expect("promoted landmark variable");
        }
        timings.optimisation = ms(t);
        self.timings.push(timings);

        Ok(FrameResult {
            index: k,
            pose: *self.estimate.pose(k).expect("current pose"),
            dropped,
            associations,
            promoted,
            solve: report,
            timings,
        })
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn odometry_covariance(cfg: &PipelineConfig, inflation: f64) -> DMatrix<f64> {
    let (t, r) = (cfg.odometry_sigma_t * inflation, cfg.odometry_sigma_r * inflation);
    DMatrix::from_diagonal(&DVector::from_vec(vec![t * t, t * t, t * t, r * r, r * r, r * r]))
}

fn observation_covariance(cfg: &PipelineConfig, q: &Quadric) -> DMatrix<f64> {
    let s = cfg.observation_noise.sigma(q.class());
    let n = q.class().dof();
    DMatrix::identity(n, n) * (s * s)
}
