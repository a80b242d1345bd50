#![allow(dead_code)]

use factor_graph::{Factor, FactorGraph, GraphEstimate};
use nalgebra::{DMatrix, Matrix3, Vector3, Vector6};
use quadric_core::{
    boxplus, sampling, Quadric, QuadricClass, RigidTransform, ScaleDiag, Signature,
};
use rand::Rng;

pub struct Scene {
    pub poses: Vec<RigidTransform>,
    pub quadrics: Vec<Quadric>,
}

/// Camera looking from `eye` towards the origin, z forward.
pub fn look_at(eye: Vector3<f64>) -> RigidTransform {
    let z = (-eye).normalize();
    let up = Vector3::z();
    let x = up.cross(&z).normalize();
    let y = z.cross(&x);
    RigidTransform::new(Matrix3::from_columns(&[x, y, z]), eye).unwrap()
}

pub fn scene(n_poses: usize) -> Scene {
    let poses = (0..n_poses)
        .map(|i| {
            let a = i as f64 / n_poses as f64 * std::f64::consts::TAU;
            look_at(Vector3::new(3.0 * a.cos(), 3.0 * a.sin(), 0.5))
        })
        .collect();
    let quadrics = vec![
        Quadric::plane(Vector3::new(0.1, 0.2, 1.0).normalize(), -1.0).unwrap(),
        Quadric::sphere(Vector3::new(0.4, -0.3, 0.2), 0.4).unwrap(),
        Quadric::cylinder(Vector3::new(-0.5, 0.3, 0.0), Vector3::new(0.1, 0.0, 1.0), 0.2).unwrap(),
        Quadric::cone(Vector3::new(0.2, 0.6, 0.8), Vector3::new(0.0, 0.3, -1.0), 0.4).unwrap(),
        Quadric::general(
            Signature::SPHERE,
            RigidTransform::new(
                *look_at(Vector3::new(1.0, 2.0, 0.3)).rotation(),
                Vector3::new(-0.3, -0.4, 0.1),
            )
            .unwrap(),
            ScaleDiag::new(2.0, 3.0, 4.0).unwrap(),
        ),
    ];
    Scene { poses, quadrics }
}

pub const POSE_SIGMA: f64 = 0.05;
pub const OBS_SIGMA: f64 = 0.05;

/// Prior on pose 0, chained odometry, and every quadric observed from every
/// pose. With `noise` each measurement is perturbed in its tangent space.
pub fn build_graph<R: Rng>(
    s: &Scene,
    with_prior: bool,
    noise: f64,
    rng: &mut R,
) -> FactorGraph {
    let mut g = FactorGraph::new();
    let cov6 = DMatrix::identity(6, 6) * POSE_SIGMA.powi(2);
    if with_prior {
        g.add(Factor::prior(0, s.poses[0], cov6.clone()).unwrap());
    }
    for i in 1..s.poses.len() {
        let rel = s.poses[i - 1].inverse() * s.poses[i];
        let xi = Vector6::from_iterator(sampling::vector_in_ball(rng, 6, noise).iter().copied());
        g.add(Factor::odometry(i - 1, i, rel.retract(&xi), cov6.clone()).unwrap());
    }
    for (i, pose) in s.poses.iter().enumerate() {
        for (j, q) in s.quadrics.iter().enumerate() {
            let dof = q.class().dof();
            let meas = q.expressed_in(pose);
            let meas = boxplus(&meas, &sampling::tangent(rng, q.class(), noise)).unwrap();
            let cov = DMatrix::identity(dof, dof) * OBS_SIGMA.powi(2);
            g.add(Factor::observation(i, j, meas, cov).unwrap());
        }
    }
    g
}

pub fn truth(s: &Scene) -> GraphEstimate {
    let mut e = GraphEstimate::new();
    for (i, p) in s.poses.iter().enumerate() {
        e.insert_pose(i, *p);
    }
    for (j, q) in s.quadrics.iter().enumerate() {
        e.insert_quadric(j, *q);
    }
    e
}

pub fn perturbed<R: Rng>(s: &Scene, radius: f64, rng: &mut R) -> GraphEstimate {
    let mut e = GraphEstimate::new();
    for (i, p) in s.poses.iter().enumerate() {
        let xi = Vector6::from_iterator(sampling::vector_in_ball(rng, 6, radius).iter().copied());
        e.insert_pose(i, p.retract(&xi));
    }
    for (j, q) in s.quadrics.iter().enumerate() {
        e.insert_quadric(j, boxplus(q, &sampling::tangent(rng, q.class(), radius)).unwrap());
    }
    e
}

pub fn max_error(a: &GraphEstimate, b: &GraphEstimate) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, p) in a.poses() {
        worst = worst.max(p.local(b.pose(i).unwrap()).unwrap().norm());
    }
    for (j, q) in a.quadrics() {
        worst = worst.max(quadric_core::boxminus(q, b.quadric(j).unwrap()).unwrap().norm());
    }
    worst
}

pub fn classes(s: &Scene) -> Vec<QuadricClass> {
    s.quadrics.iter().map(|q| q.class()).collect()
}
