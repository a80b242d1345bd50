use nalgebra::{UnitQuaternion, Vector3};
use perception::{primitive_to_quadric, Primitive, ShapeDetection};
use quadric_core::{LocalBox, RigidTransform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{NoiseSpec, SceneQuadric, SceneSpec};

/// Single-frame scene holding one primitive of each class, with the
/// primitives that generated it.
#[derive(Debug, Clone)]
pub struct DetectionScene {
    pub spec: SceneSpec,
    pub truths: Vec<Primitive>,
}

fn tilted<R: Rng>(rng: &mut R, axis: Vector3<f64>, max_tilt: f64) -> Vector3<f64> {
    let perp = axis.cross(&Vector3::new(0.3, 0.5, 0.8)).normalize();
    let rot = UnitQuaternion::from_axis_angle(
        &nalgebra::Unit::new_normalize(axis),
        rng.random_range(0.0..std::f64::consts::TAU),
    );
    let tilt = rng.random_range(0.0..max_tilt);
    (axis * tilt.cos() + rot * perp * tilt.sin()).normalize()
}

/// A background plane with a sphere, cylinder and cone in front of it, one
/// per image quadrant, seen by a camera at the origin.
pub fn detection_scene(seed: u64, depth_noise: f64) -> DetectionScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut quadrant = [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)];
    // Shuffle which quadrant holds which shape.
    for i in (1..4).rev() {
        quadrant.swap(i, rng.random_range(0..=i));
    }
    let spot = |rng: &mut ChaCha8Rng, q: (f64, f64)| {
        let z = rng.random_range(1.8..2.4);
        Vector3::new(
            q.0 * rng.random_range(0.3..0.45) * z / 2.0,
            q.1 * rng.random_range(0.22..0.32) * z / 2.0,
            z,
        )
    };

    let plane_normal = tilted(&mut rng, -Vector3::z(), 20f64.to_radians());
    let plane = Primitive::Plane {
        normal: plane_normal,
        offset: plane_normal.dot(&Vector3::new(0.0, 0.0, rng.random_range(3.2..4.0))),
    };
    let sphere = Primitive::Sphere {
        centre: spot(&mut rng, quadrant[0]),
        radius: rng.random_range(0.18..0.3),
    };
    let cyl_axis = tilted(&mut rng, Vector3::y(), 30f64.to_radians());
    let cyl_len = rng.random_range(0.25..0.35);
    let cylinder = Primitive::Cylinder {
        point: spot(&mut rng, quadrant[1]),
        axis: cyl_axis,
        radius: rng.random_range(0.1..0.18),
    };
    let cone_axis = tilted(&mut rng, Vector3::y(), 30f64.to_radians());
    let half_angle = rng.random_range(15f64..35.0).to_radians();
    let cone_len = rng.random_range(0.45..0.6);
    let centre = spot(&mut rng, quadrant[2]);
    let cone = Primitive::Cone {
        apex: centre - cone_axis * (0.5 * cone_len),
        axis: cone_axis,
        half_angle,
    };

    let quadric = |p: &Primitive| primitive_to_quadric(p).expect("valid primitive");
    let boxed = |p: &Primitive, min: [f64; 3], max: [f64; 3]| SceneQuadric {
        quadric: quadric(p),
        bounds: Some(LocalBox {
            min: Vector3::from(min),
            max: Vector3::from(max),
        }),
    };
    let quadrics = vec![
        SceneQuadric {
            quadric: quadric(&plane),
            bounds: None,
        },
        boxed(&sphere, [-1.0; 3], [1.0; 3]),
        boxed(&cylinder, [-1.0, -1.0, -cyl_len], [1.0, 1.0, cyl_len]),
        boxed(&cone, [-2.0, -2.0, 0.1 * cone_len], [2.0, 2.0, cone_len]),
    ];
    DetectionScene {
        spec: SceneSpec {
            quadrics,
            trajectory: vec![RigidTransform::identity()],
            noise: NoiseSpec {
                depth: depth_noise,
                ..NoiseSpec::default()
            },
            seed,
            visibility_range: 10.0,
        },
        truths: vec![plane, sphere, cylinder, cone],
    }
}

/// Per ground-truth primitive, the smallest parameter error among detections
/// of the same class; `None` when the class was not detected.
pub fn match_detections(truths: &[Primitive], detections: &[ShapeDetection]) -> Vec<Option<f64>> {
    truths
        .iter()
        .map(|t| {
            detections
                .iter()
                .filter_map(|d| d.primitive.parameter_error(t))
                .min_by(f64::total_cmp)
        })
        .collect()
}
