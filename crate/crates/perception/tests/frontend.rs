mod common;

use common::*;
use nalgebra::{UnitQuaternion, Vector3};
use perception::dataset::{load_depth_png, save_depth_png};
use perception::{
    backproject, detect_shapes, icp_point_to_plane, primitive_to_quadric, DetectionParams,
    IcpParams, Intrinsics, PerceptionError, Primitive,
};
use proptest::prelude::*;
use quadric_core::{Quadric, QuadricClass, RigidTransform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[test]
fn principal_point_backprojects_onto_the_optical_axis() {
    let k = Intrinsics::new(500.0, 500.0, 2.0, 1.0, 5, 3, 1000.0).unwrap();
    let mut raw = vec![0.0; 15];
    raw[k.width + 2] = 2500.0;
    let cloud = backproject(&perception::DepthImage::new(5, 3, raw), &k).unwrap();
    assert_eq!(cloud.point(cloud.index(2, 1)), Some(&Vector3::new(0.0, 0.0, 2.5)));
    assert_eq!(cloud.point(0), None);
    assert_eq!(cloud.valid_points(), 1);
}

#[test]
fn mismatched_depth_is_rejected() {
    let k = camera();
    let depth = perception::DepthImage::new(10, 10, vec![1.0; 100]);
    assert!(matches!(
        backproject(&depth, &k),
        Err(PerceptionError::DimensionMismatch { .. })
    ));
}

#[test]
fn rendered_plane_backprojects_onto_the_plane() {
    let k = camera();
    let n = Vector3::new(0.2, -0.1, -1.0).normalize();
    let plane = Quadric::plane(n, -2.0).unwrap();
    let depth = render(&[Surface::unbounded(plane)], &RigidTransform::identity(), &k);
    let cloud = backproject(&depth, &k).unwrap();
    assert_eq!(cloud.valid_points(), k.width * k.height);
    for p in cloud.points.iter().flatten() {
        assert!((n.dot(p) + 2.0).abs() < 1e-6);
    }
}

#[test]
fn frontal_plane_normals_face_the_camera() {
    let k = camera();
    let plane = Quadric::plane(Vector3::z(), 2.0).unwrap();
    let cloud = cloud_with_normals(&render(&[Surface::unbounded(plane)], &RigidTransform::identity(), &k), &k);
    let normals: Vec<_> = cloud.normals.iter().flatten().collect();
    assert_eq!(normals.len(), k.width * k.height);
    for n in normals {
        assert!(angle_deg(n, &-Vector3::z()) < 1.0);
    }
}

#[test]
fn sphere_normals_are_radial() {
    let k = camera();
    let centre = Vector3::new(0.0, 0.0, 2.0);
    let sphere = Quadric::sphere(centre, 0.5).unwrap();
    let cloud = cloud_with_normals(&render(&[Surface::unbounded(sphere)], &RigidTransform::identity(), &k), &k);
    let mut checked = 0;
    for i in 0..cloud.len() {
        if let (Some(p), Some(n)) = (cloud.point(i), cloud.normal(i)) {
            assert!(n.dot(p) < 0.0);
            assert!((n.norm() - 1.0).abs() < 1e-6);
            // Windows straddling the silhouette mix in nothing else, so
            // every estimated normal is checked.
            assert!(angle_deg(n, &(p - centre)) < 3.0, "pixel {:?}", cloud.pixel(i));
            checked += 1;
        }
    }
    assert!(checked > 1000);
}

fn room() -> Vec<Surface> {
    vec![
        Surface::unbounded(Quadric::plane(Vector3::z(), 3.0).unwrap()),
        Surface::unbounded(Quadric::plane(Vector3::x(), -0.7).unwrap()),
        Surface::unbounded(Quadric::plane(Vector3::y(), 0.5).unwrap()),
        Surface::unbounded(Quadric::sphere(Vector3::new(0.3, -0.2, 2.0), 0.35).unwrap()),
    ]
}

#[test]
fn icp_on_identical_frames_returns_identity() {
    let k = camera();
    let cloud = cloud_with_normals(&render(&room(), &RigidTransform::identity(), &k), &k);
    let res = icp_point_to_plane(&cloud, &cloud, &RigidTransform::identity(), &IcpParams::default()).unwrap();
    assert!(res.transform.translation().norm() < 1e-9);
    assert!(res.transform.angle() < 1e-9);
    assert!(res.fitness > 0.99);
}

#[test]
fn icp_recovers_small_rigid_motion() {
    let k = camera();
    let axis = Vector3::new(0.3, 1.0, -0.2).normalize();
    let motion = RigidTransform::from_quaternion(
        &UnitQuaternion::from_scaled_axis(axis * 0.5f64.to_radians()),
        Vector3::new(0.006, -0.005, 0.0058),
    );
    assert!((motion.translation().norm() - 0.01).abs() < 1e-3);
    let prev = cloud_with_normals(&render(&room(), &RigidTransform::identity(), &k), &k);
    let curr = cloud_with_normals(&render(&room(), &motion, &k), &k);
    let res = icp_point_to_plane(&prev, &curr, &RigidTransform::identity(), &IcpParams::default()).unwrap();
    // The estimate maps current-frame points into the previous frame, which
    // is the camera motion itself.
    let err = res.transform.inverse() * motion;
    assert!(err.translation().norm() < 1e-3, "{}", err.translation().norm());
    assert!(err.angle().to_degrees() < 0.05, "{}", err.angle().to_degrees());
}

#[test]
fn icp_without_overlap_fails() {
    let k = camera();
    let near = cloud_with_normals(
        &render(&[Surface::unbounded(Quadric::plane(Vector3::z(), 2.0).unwrap())], &RigidTransform::identity(), &k),
        &k,
    );
    let far = cloud_with_normals(
        &render(&[Surface::unbounded(Quadric::plane(Vector3::z(), 6.0).unwrap())], &RigidTransform::identity(), &k),
        &k,
    );
    assert!(matches!(
        icp_point_to_plane(&near, &far, &RigidTransform::identity(), &IcpParams::default()),
        Err(PerceptionError::InsufficientOverlap { .. })
    ));
}

fn plane_and_sphere() -> (Vec<Surface>, Primitive, Primitive) {
    let plane = Primitive::Plane {
        normal: Vector3::new(0.0, 0.3, -1.0).normalize(),
        offset: -2.5,
    };
    let sphere = Primitive::Sphere {
        centre: Vector3::new(-0.2, 0.1, 1.6),
        radius: 0.3,
    };
    let surfaces = vec![
        Surface::unbounded(primitive_to_quadric(&plane).unwrap()),
        Surface::unbounded(primitive_to_quadric(&sphere).unwrap()),
    ];
    (surfaces, plane, sphere)
}

#[test]
fn detects_plane_and_sphere() {
    let k = camera();
    let (surfaces, plane, sphere) = plane_and_sphere();
    let cloud = cloud_with_normals(&render(&surfaces, &RigidTransform::identity(), &k), &k);
    let dets = detect_shapes(&cloud, &DetectionParams::default()).unwrap();
    let classes: Vec<_> = dets.iter().map(|d| d.class()).collect();
    assert_eq!(dets.len(), 2, "{classes:?}");
    for truth in [plane, sphere] {
        let det = dets.iter().find(|d| d.class() == truth.class()).expect("class detected");
        let err = det.primitive.parameter_error(&truth).unwrap();
        assert!(err < 1e-3, "{:?} error {err}", truth.class());
    }
}

#[test]
fn detections_satisfy_their_thresholds() {
    let k = camera();
    let (surfaces, _, _) = plane_and_sphere();
    let cloud = cloud_with_normals(&render(&surfaces, &RigidTransform::identity(), &k), &k);
    let params = DetectionParams::default();
    let cos = params.normal_threshold.cos();
    for det in detect_shapes(&cloud, &params).unwrap() {
        assert!(det.inliers.len() >= params.min_inliers);
        assert_eq!(det.score, det.inliers.len());
        let q = primitive_to_quadric(&det.primitive).unwrap();
        for &i in &det.inliers {
            let (p, n) = (cloud.point(i).unwrap(), cloud.normal(i).unwrap());
            assert!(det.primitive.is_compatible(p, n, params.epsilon, cos));
            // Rendered points lie on the true surface, within ε of the fit.
            assert!(q.evaluate(p).abs() < 0.05);
        }
    }
}

#[test]
fn detection_is_deterministic_for_a_seed() {
    let k = camera();
    let (surfaces, _, _) = plane_and_sphere();
    let mut depth = render(&surfaces, &RigidTransform::identity(), &k);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 0.003 * k.depth_scale).unwrap();
    for d in depth.values.iter_mut().filter(|d| **d > 0.0) {
        *d += noise.sample(&mut rng);
    }
    let cloud = cloud_with_normals(&depth, &k);
    let params = DetectionParams {
        seed: 11,
        ..DetectionParams::default()
    };
    let a = detect_shapes(&cloud, &params).unwrap();
    let b = detect_shapes(&cloud, &params).unwrap();
    assert_eq!(a, b);
}

#[test]
fn uniform_noise_yields_no_detections() {
    let k = camera();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let metres: Vec<f64> = (0..k.width * k.height).map(|_| rng.random_range(1.0..4.0)).collect();
    let depth = perception::DepthImage::from_metres(k.width, k.height, &metres, k.depth_scale);
    let cloud = cloud_with_normals(&depth, &k);
    match detect_shapes(&cloud, &DetectionParams::default()) {
        Ok(dets) => assert!(dets.is_empty(), "{:?}", dets.iter().map(|d| d.class()).collect::<Vec<_>>()),
        Err(PerceptionError::EmptyCloud) => {}
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn empty_cloud_is_an_error() {
    let k = camera();
    let depth = perception::DepthImage::new(k.width, k.height, vec![0.0; k.width * k.height]);
    let cloud = cloud_with_normals(&depth, &k);
    assert!(matches!(
        detect_shapes(&cloud, &DetectionParams::default()),
        Err(PerceptionError::EmptyCloud)
    ));
}

#[test]
fn cylinder_and_cone_are_classified() {
    let k = camera();
    let cylinder = Primitive::Cylinder {
        point: Vector3::new(-0.35, 0.0, 2.0),
        axis: Vector3::y(),
        radius: 0.2,
    };
    let cone = Primitive::Cone {
        apex: Vector3::new(0.4, -0.5, 2.2),
        axis: Vector3::y(),
        half_angle: 20f64.to_radians(),
    };
    let surfaces = vec![
        Surface::bounded(primitive_to_quadric(&cylinder).unwrap(), Vector3::new(1.0, 1.0, 0.5)),
        Surface::bounded(primitive_to_quadric(&cone).unwrap(), Vector3::new(1.0, 1.0, 1.0)),
    ];
    let cloud = cloud_with_normals(&render(&surfaces, &RigidTransform::identity(), &k), &k);
    let dets = detect_shapes(&cloud, &DetectionParams::default()).unwrap();
    for truth in [cylinder, cone] {
        let det = dets
            .iter()
            .find(|d| d.class() == truth.class())
            .unwrap_or_else(|| panic!("{:?} missing", truth.class()));
        assert!(det.primitive.parameter_error(&truth).unwrap() < 1e-3);
    }
    assert!(dets.iter().all(|d| d.class() != QuadricClass::Plane));
}

#[test]
fn depth_png_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("depth.png");
    let depth = perception::DepthImage::new(3, 2, vec![0.0, 1.0, 5000.0, 12345.0, 65535.0, 7.0]);
    save_depth_png(&depth, &path).unwrap();
    assert_eq!(load_depth_png(&path).unwrap(), depth);
}

proptest! {
    #[test]
    fn backprojection_inverts_projection(u in 0usize..160, v in 0usize..120, z in 0.3f64..8.0) {
        let k = camera();
        let mut metres = vec![f64::NAN; k.width * k.height];
        metres[v * k.width + u] = z;
        let cloud = backproject(&perception::DepthImage::from_metres(k.width, k.height, &metres, k.depth_scale), &k).unwrap();
        let p = cloud.point(cloud.index(u, v)).unwrap();
        let (pu, pv) = k.project(p).unwrap();
        prop_assert!((pu - u as f64).abs() < 1e-9 && (pv - v as f64).abs() < 1e-9);
        prop_assert!((p.z - z).abs() < 1e-9);
    }

    #[test]
    fn primitive_quadrics_vanish_on_surface_points(
        cx in -1.0f64..1.0, cy in -1.0f64..1.0, cz in 1.0f64..3.0,
        r in 0.05f64..2.0, theta in 0.0f64..6.28, phi in 0.1f64..3.0,
        half in 0.1f64..1.4,
    ) {
        let c = Vector3::new(cx, cy, cz);
        let dir = Vector3::new(phi.sin() * theta.cos(), phi.sin() * theta.sin(), phi.cos());
        let sphere = Primitive::Sphere { centre: c, radius: r };
        prop_assert!(primitive_to_quadric(&sphere).unwrap().evaluate(&(c + dir * r)).abs() < 1e-9);

        let axis = Vector3::new(0.3, -0.5, 1.0).normalize();
        let perp = axis.cross(&Vector3::x()).normalize();
        let cyl = Primitive::Cylinder { point: c, axis, radius: r };
        let on_cyl = c + axis * (theta - 3.0) + perp * r;
        prop_assert!(primitive_to_quadric(&cyl).unwrap().evaluate(&on_cyl).abs() < 1e-9);

        let cone = Primitive::Cone { apex: c, axis, half_angle: half };
        let on_cone = c + (axis * half.cos() + perp * half.sin()) * phi;
        prop_assert!(primitive_to_quadric(&cone).unwrap().evaluate(&on_cone).abs() < 1e-9);

        let plane = Primitive::Plane { normal: dir, offset: cz };
        let on_plane = dir * cz + perp.cross(&dir).normalize() * r;
        prop_assert!(primitive_to_quadric(&plane).unwrap().evaluate(&on_plane).abs() < 1e-9);
    }
}
