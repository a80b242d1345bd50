use factor_graph::{Measurement, VariableKey};
use nalgebra::{UnitQuaternion, Vector3};
use proptest::prelude::*;
use quadric_core::{parse_quadric, Quadric, RigidTransform};
use slam_pipeline::{
    associate, association_cost, export_map, export_reconstruction, export_trajectory,
    format_trajectory, parse_trajectory, reconstruction_points, Association, ColorMode, Landmark,
    Observation, Pipeline, PipelineConfig, PipelineError,
};

fn step() -> RigidTransform {
    RigidTransform::from_quaternion(
        &UnitQuaternion::from_scaled_axis(Vector3::new(0.0, 0.02, 0.0)),
        Vector3::new(0.05, 0.0, 0.0),
    )
}

fn sphere() -> Quadric {
    Quadric::sphere(Vector3::new(0.3, 0.1, 3.0), 0.4).unwrap()
}

fn plane() -> Quadric {
    Quadric::plane(Vector3::new(0.0, 0.2, -1.0).normalize(), -4.0).unwrap()
}

/// Exact observations of `world` from a straight-line trajectory.
fn run(frames: usize, world: &[Quadric], config: PipelineConfig) -> (Pipeline, Vec<slam_pipeline::FrameResult>) {
    let mut p = Pipeline::new(config).unwrap();
    let mut pose = RigidTransform::identity();
    let mut results = Vec::new();
    for k in 0..frames {
        if k > 0 {
            pose = pose * step();
        }
        let obs = world.iter().map(|q| Observation::bare(q.expressed_in(&pose))).collect();
        let odom = (k > 0).then(step);
        results.push(p.integrate_observations(k as f64, odom, obs).unwrap());
    }
    (p, results)
}

fn count_factors(p: &Pipeline) -> (usize, usize, usize) {
    let mut c = (0, 0, 0);
    for f in p.graph().factors() {
        match f.measurement() {
            Measurement::Prior { .. } => c.0 += 1,
            Measurement::Odometry { .. } => c.1 += 1,
            Measurement::Observation { .. } => c.2 += 1,
        }
    }
    c
}

#[test]
fn first_frame_has_a_prior_and_nothing_promoted() {
    let (p, results) = run(1, &[sphere()], PipelineConfig::default());
    assert_eq!(p.estimate().poses().count(), 1);
    assert_eq!(count_factors(&p), (1, 0, 0));
    assert!(results[0].promoted.is_empty());
    assert_eq!(p.landmarks().len(), 1);
    assert!(p.landmarks()[0].is_pending());
}

#[test]
fn sphere_is_promoted_on_its_fifth_observation() {
    let (p, results) = run(10, &[sphere()], PipelineConfig::default());
    for (k, r) in results.iter().enumerate() {
        assert_eq!(r.promoted, if k == 4 { vec![0] } else { vec![] }, "frame {k}");
    }
    assert_eq!(p.landmarks().len(), 1);
    assert_eq!(p.landmarks()[0].observation_count, 10);
    // All ten observations end up as factors, five of them retroactively.
    assert_eq!(count_factors(&p), (1, 9, 10));
}

#[test]
fn promotion_threshold_is_configurable() {
    let config = PipelineConfig {
        promotion_threshold: 2,
        ..PipelineConfig::default()
    };
    let (_, results) = run(3, &[sphere()], config);
    assert_eq!(results[1].promoted, vec![0]);
}

#[test]
fn graph_grows_by_one_pose_and_one_odometry_per_frame() {
    let (p, results) = run(7, &[sphere(), plane()], PipelineConfig::default());
    assert_eq!(p.estimate().poses().count(), 7);
    let (priors, odometry, observations) = count_factors(&p);
    assert_eq!((priors, odometry), (1, 6));
    assert_eq!(observations, 14);
    assert!(results.iter().all(|r| r.solve.converged && !r.dropped));
    for lm in p.landmarks() {
        assert!(!lm.is_pending());
        assert!(matches!(lm.key(), VariableKey::Quadric(id, _) if id == lm.id));
    }
}

#[test]
fn exact_data_is_reproduced() {
    let (p, _) = run(8, &[sphere(), plane()], PipelineConfig::default());
    let mut pose = RigidTransform::identity();
    for (k, (_, est)) in p.trajectory().iter().enumerate() {
        if k > 0 {
            pose = pose * step();
        }
        assert!((est.translation() - pose.translation()).norm() < 1e-6);
    }
    let sphere_lm = &p.landmarks()[0];
    assert!((sphere_lm.quadric.pose().translation() - sphere().pose().translation()).norm() < 1e-6);
}

#[test]
fn dropped_frames_fall_back_to_constant_velocity() {
    let mut p = Pipeline::new(PipelineConfig::default()).unwrap();
    p.integrate_observations(0.0, None, vec![]).unwrap();
    p.integrate_observations(1.0, Some(step()), vec![]).unwrap();
    let r = p.integrate_observations(2.0, None, vec![]).unwrap();
    assert!(r.dropped);
    assert!(p.frames()[2].dropped && !p.frames()[1].dropped);
    let expected = step() * step();
    assert!((r.pose.translation() - expected.translation()).norm() < 1e-9);
    assert_eq!(count_factors(&p), (1, 2, 0));
}

fn landmark_at(q: Quadric) -> Landmark {
    // Build through the public pipeline so the landmark carries a real id.
    let mut p = Pipeline::new(PipelineConfig::default()).unwrap();
    p.integrate_observations(0.0, None, vec![Observation::bare(q)]).unwrap();
    p.landmarks()[0].clone()
}

#[test]
fn single_sphere_matches_its_landmark() {
    let cfg = PipelineConfig::default();
    let lm = landmark_at(sphere());
    let out = associate(&[sphere()], &[lm], &RigidTransform::identity(), &cfg);
    assert_eq!(out, vec![Association::Landmark(0)]);
}

#[test]
fn no_landmarks_means_new() {
    let cfg = PipelineConfig::default();
    let out = associate(&[sphere(), plane()], &[], &RigidTransform::identity(), &cfg);
    assert_eq!(out, vec![Association::New, Association::New]);
}

#[test]
fn lowest_cost_landmark_under_the_gate_wins() {
    let cfg = PipelineConfig {
        association_threshold: 0.5,
        ..PipelineConfig::default()
    };
    let sigma = cfg.observation_noise.sphere;
    let detection = Quadric::sphere(Vector3::zeros(), 0.5).unwrap();
    // A sphere's manifold error is its centre offset (radius unchanged), so
    // cost = d²/σ².
    let at = |cost: f64, dir: Vector3<f64>| {
        let d = sigma * cost.sqrt();
        Quadric::sphere(dir * d, 0.5).unwrap()
    };
    let far = landmark_at(at(0.8, Vector3::x()));
    let near = landmark_at(at(0.3, Vector3::y()));
    let pose = RigidTransform::identity();
    let c_far = association_cost(&detection, &far.quadric, &pose, sigma).unwrap();
    let c_near = association_cost(&detection, &near.quadric, &pose, sigma).unwrap();
    assert!((c_far - 0.8).abs() < 1e-9 && (c_near - 0.3).abs() < 1e-9);
    let out = associate(&[detection], &[far.clone(), near], &pose, &cfg);
    assert_eq!(out, vec![Association::Landmark(1)]);
    // Above the gate the detection starts a new landmark.
    assert_eq!(associate(&[detection], &[far], &pose, &cfg), vec![Association::New]);
}

#[test]
fn association_is_one_to_one_and_class_aware() {
    let cfg = PipelineConfig::default();
    let lm = landmark_at(sphere());
    let out = associate(&[sphere(), sphere(), plane()], &[lm], &RigidTransform::identity(), &cfg);
    assert_eq!(out, vec![Association::Landmark(0), Association::New, Association::New]);
}

#[test]
fn association_uses_the_predicted_pose() {
    let cfg = PipelineConfig::default();
    let lm = landmark_at(sphere());
    let pose = step() * step();
    let seen = sphere().expressed_in(&pose);
    assert_eq!(associate(&[seen], &[lm.clone()], &pose, &cfg), vec![Association::Landmark(0)]);
    assert_eq!(associate(&[seen], &[lm], &RigidTransform::identity(), &cfg), vec![Association::New]);
}

/// Sphere sequence whose observations carry surface points, optionally
/// pushed off the surface.
fn sphere_with_points(noise: f64) -> Pipeline {
    let truth = sphere();
    let centre = *truth.pose().translation();
    let mut p = Pipeline::new(PipelineConfig::default()).unwrap();
    let mut pose = RigidTransform::identity();
    for k in 0..6 {
        if k > 0 {
            pose = pose * step();
        }
        let points: Vec<Vector3<f64>> = (0..200)
            .map(|i| {
                let a = i as f64 * 0.37;
                let b = i as f64 * 0.11;
                let dir = Vector3::new(a.cos() * b.sin(), a.sin() * b.sin(), -b.cos().abs());
                let r = 0.4 + noise * ((i % 7) as f64 - 3.0) / 3.0;
                pose.inverse().transform_point(&(centre + dir.normalize() * r))
            })
            .collect();
        let obs = Observation {
            quadric: truth.expressed_in(&pose),
            points,
            colors: vec![[10, 20, 30]; 200],
        };
        p.integrate_observations(k as f64, (k > 0).then(step), vec![obs]).unwrap();
    }
    p
}

#[test]
fn on_surface_points_reconstruct_on_the_surface() {
    let p = sphere_with_points(0.0);
    let q = p.landmarks()[0].quadric;
    let pts = reconstruction_points(&p, ColorMode::Image).unwrap();
    assert_eq!(pts.len(), 6 * 200);
    assert!(pts.iter().all(|pt| pt.color == [10, 20, 30]));
    for pt in pts {
        assert!(q.evaluate(&pt.position).abs() < 1e-6);
    }
}

#[test]
fn noisy_points_reconstruct_at_the_estimated_radius() {
    let p = sphere_with_points(0.03);
    let q = p.landmarks()[0].quadric;
    let centre = q.pose().translation();
    let radius = 1.0 / q.scale().alpha;
    let pts = reconstruction_points(&p, ColorMode::Random { seed: 1 }).unwrap();
    let colors: std::collections::BTreeSet<_> = pts.iter().map(|p| p.color).collect();
    assert_eq!(colors.len(), 1);
    for pt in pts {
        assert!(((pt.position - centre).norm() - radius).abs() < 1e-6);
    }
}

#[test]
fn empty_map_cannot_be_reconstructed() {
    let (p, _) = run(3, &[sphere()], PipelineConfig::default());
    assert!(matches!(reconstruction_points(&p, ColorMode::Image), Err(PipelineError::EmptyMap)));
    let dir = tempfile::tempdir().unwrap();
    assert!(export_reconstruction(&p, &dir.path().join("r.ply"), ColorMode::Image).is_err());
}

#[test]
fn exports_are_readable_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let files = |tag: &str| {
        let p = sphere_with_points(0.01);
        let (ply, traj, map) = (
            dir.path().join(format!("{tag}.ply")),
            dir.path().join(format!("{tag}.txt")),
            dir.path().join(format!("{tag}.map")),
        );
        export_reconstruction(&p, &ply, ColorMode::Random { seed: 3 }).unwrap();
        export_trajectory(&p, &traj).unwrap();
        export_map(&p, &map).unwrap();
        [ply, traj, map].map(|f| std::fs::read_to_string(f).unwrap())
    };
    let a = files("a");
    let b = files("b");
    assert_eq!(a, b);
    assert!(a[0].starts_with("ply\n"));
    assert!(a[0].contains("element vertex 1200\n"));
    assert_eq!(parse_trajectory(&a[1]).unwrap().len(), 6);
    let map: Vec<Quadric> = a[2].lines().map(|l| parse_quadric(l).unwrap()).collect();
    assert_eq!(map.len(), 1);
}

proptest! {
    #[test]
    fn trajectory_text_round_trips(
        t in 0.0f64..1e6,
        xyz in prop::array::uniform3(-50.0f64..50.0),
        rot in prop::array::uniform3(-3.0f64..3.0),
    ) {
        let pose = RigidTransform::from_quaternion(
            &UnitQuaternion::from_euler_angles(rot[0], rot[1], rot[2]),
            Vector3::from(xyz),
        );
        let back = parse_trajectory(&format_trajectory(&[(t, pose)])).unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert!((back[0].0 - t).abs() < 1e-6);
        prop_assert!((back[0].1.matrix() - pose.matrix()).abs().max() < 1e-6);
    }
}
