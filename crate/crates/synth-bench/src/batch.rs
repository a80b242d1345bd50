use std::collections::BTreeMap;

use factor_graph::{solve, Factor, FactorGraph, GraphEstimate, Measurement, SolveOptions, SolveReport};
use nalgebra::{DMatrix, DVector};
use perception::Intrinsics;
use quadric_core::RigidTransform;
use slam_pipeline::{FrameInput, Pipeline, PipelineConfig};

use crate::generate::{dead_reckoning, generate_observations, SyntheticFrame};
use crate::metrics::{evaluate_ate, quadric_error};
use crate::render::render_depth;
use crate::{Result, SceneSpec};

/// σ floor so that noise-free scenes still give invertible covariances.
const MIN_SIGMA: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub report: SolveReport,
    pub estimate: GraphEstimate,
    pub dead_reckoning: Vec<RigidTransform>,
    pub optimised: Vec<RigidTransform>,
    pub ate_dead_reckoning: f64,
    pub ate_optimised: f64,
    /// Per scene landmark; `None` when it was never observed.
    pub quadric_errors: Vec<Option<f64>>,
}

/// Full graph over all frames, initialised from dead reckoning and each
/// landmark's first observation. The first pose is anchored at the truth.
pub fn build_batch(spec: &SceneSpec, frames: &[SyntheticFrame]) -> Result<(FactorGraph, GraphEstimate)> {
    let n = &spec.noise;
    let (st, sr) = (n.odometry_t.max(MIN_SIGMA), n.odometry_r.max(MIN_SIGMA));
    let odo_cov = DMatrix::from_diagonal(&DVector::from_vec(vec![
        st * st,
        st * st,
        st * st,
        sr * sr,
        sr * sr,
        sr * sr,
    ]));
    let so = n.observation.max(MIN_SIGMA);
    let poses = dead_reckoning(&spec.trajectory[0], frames);

    let mut graph = FactorGraph::new();
    let mut init = GraphEstimate::new();
    graph.add(Factor::isotropic(
        Measurement::Prior {
            pose: 0,
            value: spec.trajectory[0],
        },
        MIN_SIGMA,
    )?);
    let mut seen = BTreeMap::new();
    for (k, frame) in frames.iter().enumerate() {
        init.insert_pose(k, poses[k]);
        if let Some(o) = frame.odometry {
            graph.add(Factor::odometry(k - 1, k, o, odo_cov.clone())?);
        }
        for &(l, q) in &frame.observations {
            seen.entry(l).or_insert_with(|| q.to_world(&poses[k]));
            let dof = q.class().dof();
            graph.add(Factor::observation(k, l, q, DMatrix::identity(dof, dof) * (so * so))?);
        }
    }
    for (l, q) in seen {
        init.insert_quadric(l, q);
    }
    Ok((graph, init))
}

/// Generates a scene's measurements, solves the batch problem and scores
/// the result against the ground truth.
pub fn run_batch(spec: &SceneSpec, options: &SolveOptions) -> Result<BatchResult> {
    let frames = generate_observations(spec)?;
    let (graph, init) = build_batch(spec, &frames)?;
    let (estimate, report) = solve(&graph, &init, options)?;
    let dead = dead_reckoning(&spec.trajectory[0], &frames);
    let optimised: Vec<RigidTransform> = (0..frames.len())
        .map(|k| *estimate.pose(k).expect("pose per frame"))
        .collect();
    let quadric_errors = spec
        .quadrics
        .iter()
        .enumerate()
        .map(|(l, sq)| estimate.quadric(l).map(|q| quadric_error(q, &sq.quadric)).transpose())
        .collect::<Result<_>>()?;
    Ok(BatchResult {
        report,
        ate_dead_reckoning: evaluate_ate(&dead, &spec.trajectory)?,
        ate_optimised: evaluate_ate(&optimised, &spec.trajectory)?,
        estimate,
        dead_reckoning: dead,
        optimised,
        quadric_errors,
    })
}

/// Feeds the scene's synthetic measurements through the incremental
/// pipeline, bypassing the depth front-end.
pub fn run_incremental(spec: &SceneSpec, config: PipelineConfig) -> Result<Pipeline> {
    let frames = generate_observations(spec)?;
    let mut pipeline = Pipeline::new(config)?;
    for (k, f) in frames.into_iter().enumerate() {
        let obs = f
            .observations
            .into_iter()
            .map(|(_, q)| slam_pipeline::Observation::bare(q))
            .collect();
        pipeline.integrate_observations(k as f64, f.odometry, obs)?;
    }
    Ok(pipeline)
}

/// Renders every frame and runs the full depth pipeline on it.
pub fn run_rendered(spec: &SceneSpec, config: PipelineConfig, k: &Intrinsics) -> Result<Pipeline> {
    let config = PipelineConfig {
        intrinsics: *k,
        ..config
    };
    let mut pipeline = Pipeline::new(config)?;
    for frame in 0..spec.trajectory.len() {
        pipeline.integrate_frame(&FrameInput {
            timestamp: frame as f64,
            depth: render_depth(spec, frame, k),
            rgb: None,
        })?;
    }
    Ok(pipeline)
}
