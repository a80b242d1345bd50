use nalgebra::{UnitQuaternion, Vector3};
use perception::{detect_shapes, DetectionParams, Intrinsics};
use proptest::prelude::*;
use quadric_core::{
    boxminus, Quadric, QuadricClass, RigidTransform, ScaleDiag, Signature,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slam_pipeline::PipelineConfig;
use synth_bench::{
    circle_trajectory, dead_reckoning, detection_scene, evaluate_ate, generate_observations,
    match_detections, observation_noise, quadric_error, render, run_incremental, run_rendered,
    NoiseSpec, SceneQuadric, SceneSpec, SynthError,
};

fn camera(size: usize) -> Intrinsics {
    let c = (size - 1) as f64 / 2.0;
    Intrinsics::new(200.0, 200.0, c, c, size, size, 5000.0).unwrap()
}

fn single(quadric: Quadric) -> SceneSpec {
    SceneSpec {
        quadrics: vec![SceneQuadric {
            quadric,
            bounds: None,
        }],
        trajectory: vec![RigidTransform::identity()],
        noise: NoiseSpec::default(),
        seed: 0,
        visibility_range: 10.0,
    }
}

fn silent(mut spec: SceneSpec) -> SceneSpec {
    spec.noise = NoiseSpec {
        odometry_t: 0.0,
        odometry_r: 0.0,
        observation: 0.0,
        depth: 0.0,
    };
    spec
}

#[test]
fn zero_noise_measurements_are_exact() {
    let spec = silent(SceneSpec::default_scene(3));
    let frames = generate_observations(&spec).unwrap();
    assert_eq!(frames.len(), spec.trajectory.len());
    for (k, f) in frames.iter().enumerate() {
        for &(l, q) in &f.observations {
            let exact = spec.quadrics[l].quadric.expressed_in(&spec.trajectory[k]);
            assert!(boxminus(&q, &exact).unwrap().norm() < 1e-12);
        }
    }
    let dead = dead_reckoning(&spec.trajectory[0], &frames);
    for (d, t) in dead.iter().zip(&spec.trajectory) {
        assert!((d.matrix() - t.matrix()).amax() < 1e-12);
    }
}

#[test]
fn fixed_seed_is_bit_identical() {
    let a = generate_observations(&SceneSpec::default_scene(11)).unwrap();
    let b = generate_observations(&SceneSpec::default_scene(11)).unwrap();
    let c = generate_observations(&SceneSpec::default_scene(12)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn observation_noise_has_the_requested_moments() {
    let n = 100_000;
    let sigma = 0.01;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let dof = QuadricClass::CircularCone.dof();
    let mut sum = vec![0.0; dof];
    let mut sq = vec![0.0; dof];
    for _ in 0..n {
        let v = observation_noise(&mut rng, QuadricClass::CircularCone, sigma);
        for (i, x) in v.as_slice().iter().enumerate() {
            sum[i] += x;
            sq[i] += x * x;
        }
    }
    for i in 0..dof {
        let mean = sum[i] / n as f64;
        let std = (sq[i] / n as f64 - mean * mean).sqrt();
        assert!(mean.abs() < 3.0 * sigma / (n as f64).sqrt(), "mean {mean}");
        // The standard error of the sample deviation is σ/√(2n).
        assert!((std - sigma).abs() < 3.0 * sigma / (2.0 * n as f64).sqrt(), "std {std}");
    }
}

#[test]
fn fronto_parallel_plane_renders_constant_depth() {
    let spec = single(Quadric::plane(Vector3::z(), 2.0).unwrap());
    let r = render(&spec, 0, &camera(31));
    assert!(r.source.iter().all(|s| *s == Some(0)));
    assert!(r.depth.iter().all(|d| (d - 2.0).abs() < 1e-12));
}

#[test]
fn sphere_centre_pixel_sees_the_front_pole() {
    let spec = single(Quadric::sphere(Vector3::new(0.0, 0.0, 5.0), 0.2).unwrap());
    let k = camera(31);
    let r = render(&spec, 0, &k);
    let centre = 15 * 31 + 15;
    assert!((r.depth[centre] - 4.8).abs() < 1e-12);
    // Rays at the image corners pass the sphere.
    assert!(r.depth[0].is_nan() && r.source[0].is_none());
}

#[test]
fn rendered_points_lie_on_their_source_quadric() {
    let spec = SceneSpec::default_scene(0);
    let k = camera(101);
    for frame in [0, 7] {
        let r = render(&spec, frame, &k);
        let pose = spec.trajectory[frame];
        let mut hits = 0;
        for i in 0..r.depth.len() {
            let Some(l) = r.source[i] else { continue };
            let ray = k.ray((i % r.width) as f64, (i / r.width) as f64);
            let p = pose.transform_point(&(ray * r.depth[i]));
            let f = spec.quadrics[l].quadric.evaluate(&p);
            assert!(f.abs() < 1e-9, "landmark {l}: {f:e}");
            hits += 1;
        }
        assert!(hits > r.depth.len() / 2);
    }
}

#[test]
fn detection_recovers_every_scene_primitive() {
    let scene = detection_scene(0, 0.0);
    let k = Intrinsics::tum_freiburg2();
    let cloud = synth_bench::generate_cloud(&scene.spec, 0, &k, 2).unwrap();
    let detections = detect_shapes(&cloud, &DetectionParams::default()).unwrap();
    for (truth, error) in scene.truths.iter().zip(match_detections(&scene.truths, &detections)) {
        let e = error.unwrap_or_else(|| panic!("{:?} not detected", truth.class()));
        assert!(e < 1e-3, "{:?}: {e}", truth.class());
    }
}

#[test]
fn ate_examples() {
    let traj = circle_trajectory(6, 2.0, 0.5, 1.0);
    assert!(evaluate_ate(&traj, &traj).unwrap() < 1e-12);

    let g = RigidTransform::from_quaternion(
        &UnitQuaternion::from_euler_angles(0.3, -0.2, 1.1),
        Vector3::new(1.0, -2.0, 0.5),
    );
    let moved: Vec<_> = traj.iter().map(|p| g * *p).collect();
    assert!(evaluate_ate(&moved, &traj).unwrap() < 1e-12);

    // The middle camera is 0.3 off a straight line. After centring, the
    // lateral errors are (−0.1, 0.2, −0.1), so ATE = √(0.06/3).
    let at = |x: f64, y: f64| RigidTransform::from_translation(Vector3::new(x, y, 0.0));
    let truth = [at(-1.0, 0.0), at(0.0, 0.0), at(1.0, 0.0)];
    let est = [at(-1.0, 0.0), at(0.0, 0.3), at(1.0, 0.0)];
    let ate = evaluate_ate(&est, &truth).unwrap();
    assert!((ate - 0.02f64.sqrt()).abs() < 1e-12, "{ate}");

    assert!(matches!(
        evaluate_ate(&est[..2], &truth),
        Err(SynthError::LengthMismatch { estimated: 2, truth: 3 })
    ));
}

proptest! {
    #[test]
    fn ate_ignores_a_common_rigid_motion(
        seed in 0u64..1000,
        e in prop::array::uniform3(-3.0f64..3.0),
        t in prop::array::uniform3(-5.0f64..5.0),
    ) {
        let spec = SceneSpec::default_scene(seed);
        let frames = generate_observations(&spec).unwrap();
        let dead = dead_reckoning(&spec.trajectory[0], &frames);
        let g = RigidTransform::from_quaternion(&UnitQuaternion::from_euler_angles(e[0], e[1], e[2]), Vector3::from(t));
        let base = evaluate_ate(&dead, &spec.trajectory).unwrap();
        let both = evaluate_ate(
            &dead.iter().map(|p| g * *p).collect::<Vec<_>>(),
            &spec.trajectory.iter().map(|p| g * *p).collect::<Vec<_>>(),
        ).unwrap();
        let one = evaluate_ate(&dead.iter().map(|p| g * *p).collect::<Vec<_>>(), &spec.trajectory).unwrap();
        prop_assert!((both - base).abs() < 1e-9);
        prop_assert!((one - base).abs() < 1e-9);
    }
}

#[test]
fn quadric_error_examples() {
    let s = Quadric::sphere(Vector3::new(0.1, 0.2, 0.3), 0.5).unwrap();
    assert_eq!(quadric_error(&s, &s).unwrap(), 0.0);

    // Scale coordinates are inverse semi-axes.
    let grown = Quadric::sphere(Vector3::new(0.1, 0.2, 0.3), 0.505).unwrap();
    let expected = (1.0 / 0.505 - 1.0 / 0.5f64).abs();
    assert!((quadric_error(&grown, &s).unwrap() - expected).abs() < 1e-12);

    let pose = RigidTransform::from_quaternion(
        &UnitQuaternion::from_euler_angles(0.4, 0.1, -0.7),
        Vector3::new(1.0, 0.0, 2.0),
    );
    let ellipsoid = Quadric::general(Signature::SPHERE, pose, ScaleDiag::new(1.0, 2.0, 3.0).unwrap());
    let half_turn = RigidTransform::from_quaternion(
        &UnitQuaternion::from_axis_angle(&Vector3::y_axis(), std::f64::consts::PI),
        Vector3::zeros(),
    );
    let flipped = ellipsoid.with_pose(pose * half_turn);
    assert!(quadric_error(&flipped, &ellipsoid).unwrap() < 1e-9);

    let plane = Quadric::plane(Vector3::z(), 1.0).unwrap();
    assert!(matches!(quadric_error(&plane, &s), Err(SynthError::Quadric(_))));
}

#[test]
fn incremental_pipeline_beats_dead_reckoning() {
    let spec = SceneSpec::default_scene(4);
    let frames = generate_observations(&spec).unwrap();
    let dead = dead_reckoning(&spec.trajectory[0], &frames);
    let pipeline = run_incremental(&spec, PipelineConfig::default()).unwrap();
    let est: Vec<_> = pipeline.trajectory().into_iter().map(|(_, p)| p).collect();
    let ate = evaluate_ate(&est, &spec.trajectory).unwrap();
    let ate_dead = evaluate_ate(&dead, &spec.trajectory).unwrap();
    assert!(ate < ate_dead, "{ate} vs dead reckoning {ate_dead}");
    assert_eq!(pipeline.promoted_landmarks().count(), spec.quadrics.len());
}

#[test]
fn rendered_sequence_runs_end_to_end() {
    let mut spec = SceneSpec::default_scene(0);
    spec.trajectory = circle_trajectory(8, 2.0, 0.3, 15f64.to_radians());
    let k = Intrinsics::new(260.0, 260.0, 159.5, 119.5, 320, 240, 5000.0).unwrap();
    let pipeline = run_rendered(&spec, PipelineConfig::default(), &k).unwrap();
    assert_eq!(pipeline.frames().len(), 8);
    assert!(pipeline.frames().iter().all(|f| !f.dropped));
    assert!(pipeline.promoted_landmarks().count() >= 3);
    // The estimate starts at the identity, so compare relative motion.
    let est: Vec<_> = pipeline.trajectory().into_iter().map(|(_, p)| p).collect();
    let ate = evaluate_ate(&est, &spec.trajectory).unwrap();
    assert!(ate < 0.01, "{ate}");
}

#[test]
fn scene_text_round_trips_with_bounds() {
    let spec = detection_scene(9, 0.004).spec;
    let back = SceneSpec::parse(&spec.format()).unwrap();
    assert_eq!(back.quadrics.len(), spec.quadrics.len());
    assert_eq!(back.seed, spec.seed);
    assert_eq!(back.noise, spec.noise);
    for (a, b) in back.quadrics.iter().zip(&spec.quadrics) {
        assert_eq!(a.bounds, b.bounds);
        assert!(a.quadric.to_matrix().max_difference(&b.quadric.to_matrix()) < 1e-12);
    }
}
