//! Scene description and its line-oriented text form:
//!
//! ```text
//! # comment
//! seed 7
//! odometry_noise 0.01 0.5        # sigma_t (m), sigma_r (degrees)
//! observation_noise 0.01
//! depth_noise 0.0                # metres
//! visibility_range 6
//! circle 20 2.0 0.0 360          # n, radius, height, arc (degrees)
//! pose 0 0 0 1 0 0 0             # tx ty tz qw qx qy qz, camera to world
//! quadric sphere 0 0 0 1 0 0 0 2 2 2 [box x0 y0 z0 x1 y1 z1]
//! ```
//!
//! Cameras look along their +z axis with +y pointing down the image.

use std::fmt::Write as _;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use quadric_core::{format_quadric, parse_quadric, LocalBox, Quadric, RigidTransform};

use crate::{Result, SynthError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneQuadric {
    pub quadric: Quadric,
    /// Patch rendered by the depth simulator; unbounded when `None`.
    pub bounds: Option<LocalBox>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub odometry_t: f64,
    /// Radians.
    pub odometry_r: f64,
    /// Per reduced coordinate of each observation.
    pub observation: f64,
    /// Metres, added to rendered depth.
    pub depth: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            odometry_t: 0.01,
            odometry_r: 0.5f64.to_radians(),
            observation: 0.01,
            depth: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub quadrics: Vec<SceneQuadric>,
    /// Ground-truth camera-to-world poses.
    pub trajectory: Vec<RigidTransform>,
    pub noise: NoiseSpec,
    pub seed: u64,
    pub visibility_range: f64,
}

/// Camera at `eye` looking at `target`, image up roughly along `up`.
pub fn look_at(eye: Vector3<f64>, target: Vector3<f64>, up: Vector3<f64>) -> RigidTransform {
    let z = (target - eye).normalize();
    let x = z.cross(&up).normalize();
    let y = z.cross(&x);
    RigidTransform::new(Matrix3::from_columns(&[x, y, z]), eye).expect("orthonormal frame")
}

/// `n` cameras evenly spread over `arc` radians of a horizontal circle,
/// all facing the point above the centre at the same height.
pub fn circle_trajectory(n: usize, radius: f64, height: f64, arc: f64) -> Vec<RigidTransform> {
    let full = (arc - std::f64::consts::TAU).abs() < 1e-12;
    let steps = if full { n } else { n.saturating_sub(1).max(1) };
    (0..n)
        .map(|i| {
            let a = arc * i as f64 / steps as f64;
            let eye = Vector3::new(radius * a.cos(), radius * a.sin(), height);
            look_at(eye, Vector3::new(0.0, 0.0, height), Vector3::z())
        })
        .collect()
}

impl SceneSpec {
    /// Twenty cameras on a 2 m circle around two planes, two spheres, a
    /// cylinder and a cone.
    pub fn default_scene(seed: u64) -> Self {
        let bounded = |q: Quadric, min: [f64; 3], max: [f64; 3]| SceneQuadric {
            quadric: q,
            bounds: Some(LocalBox {
                min: Vector3::from(min),
                max: Vector3::from(max),
            }),
        };
        let quadrics = vec![
            bounded(
                Quadric::plane(Vector3::z(), -0.8).unwrap(),
                [-0.01, -3.0, -3.0],
                [0.01, 3.0, 3.0],
            ),
            bounded(
                Quadric::plane(Vector3::new(0.15, 0.1, 1.0).normalize(), 1.2).unwrap(),
                [-0.01, -3.0, -3.0],
                [0.01, 3.0, 3.0],
            ),
            bounded(
                Quadric::sphere(Vector3::new(0.5, 0.3, 0.0), 0.3).unwrap(),
                [-1.0; 3],
                [1.0; 3],
            ),
            bounded(
                Quadric::sphere(Vector3::new(-0.45, -0.4, -0.4), 0.25).unwrap(),
                [-1.0; 3],
                [1.0; 3],
            ),
            bounded(
                Quadric::cylinder(Vector3::new(-0.4, 0.5, -0.3), Vector3::z(), 0.15).unwrap(),
                [-1.0, -1.0, -0.5],
                [1.0, 1.0, 0.5],
            ),
            bounded(
                Quadric::cone(Vector3::new(0.3, -0.5, 0.5), -Vector3::z(), 20f64.to_radians()).unwrap(),
                [-1.0, -1.0, 0.0],
                [1.0, 1.0, 0.8],
            ),
        ];
        Self {
            quadrics,
            trajectory: circle_trajectory(20, 2.0, 0.0, std::f64::consts::TAU),
            noise: NoiseSpec::default(),
            seed,
            visibility_range: 6.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SynthError::InvalidScene(m.to_string()));
        if self.trajectory.is_empty() {
            return bad("at least one pose is required");
        }
        let n = &self.noise;
        if [n.odometry_t, n.odometry_r, n.observation, n.depth]
            .iter()
            .any(|s| !(s.is_finite() && *s >= 0.0))
        {
            return bad("noise levels must be finite and non-negative");
        }
        if !(self.visibility_range > 0.0) {
            return bad("visibility range must be positive");
        }
        Ok(())
    }

    /// A landmark is visible when its origin is within range and in front
    /// of the camera.
    pub fn is_visible(&self, frame: usize, landmark: usize) -> bool {
        let origin = self.quadrics[landmark].quadric.pose().translation();
        let local = self.trajectory[frame].inverse().transform_point(origin);
        local.z > 0.0 && local.norm() <= self.visibility_range
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = Self {
            quadrics: Vec::new(),
            trajectory: Vec::new(),
            noise: NoiseSpec::default(),
            seed: 0,
            visibility_range: 6.0,
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| SynthError::Parse { line: i + 1, message };
            let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let nums = |s: &str| -> Result<Vec<f64>> {
                s.split_whitespace()
                    .map(|f| f.parse::<f64>().map_err(|e| err(format!("{f:?}: {e}"))))
                    .collect()
            };
            let exact = |v: Vec<f64>, n: usize| -> Result<Vec<f64>> {
                if v.len() == n {
                    Ok(v)
                } else {
                    Err(err(format!("{key} takes {n} numbers, got {}", v.len())))
                }
            };
            match key {
                "seed" => spec.seed = rest.trim().parse().map_err(|e| err(format!("seed: {e}")))?,
                "odometry_noise" => {
                    let v = exact(nums(rest)?, 2)?;
                    spec.noise.odometry_t = v[0];
                    spec.noise.odometry_r = v[1].to_radians();
                }
                "observation_noise" => spec.noise.observation = exact(nums(rest)?, 1)?[0],
                "depth_noise" => spec.noise.depth = exact(nums(rest)?, 1)?[0],
                "visibility_range" => spec.visibility_range = exact(nums(rest)?, 1)?[0],
                "circle" => {
                    let v = exact(nums(rest)?, 4)?;
                    if v[0] < 1.0 || v[0].fract() != 0.0 {
                        return Err(err("circle needs a positive pose count".into()));
                    }
                    spec.trajectory
                        .extend(circle_trajectory(v[0] as usize, v[1], v[2], v[3].to_radians()));
                }
                "pose" => {
                    let v = exact(nums(rest)?, 7)?;
                    let q = Quaternion::new(v[3], v[4], v[5], v[6]);
                    if (q.norm() - 1.0).abs() > 1e-6 {
                        return Err(err("pose quaternion must be unit".into()));
                    }
                    spec.trajectory.push(RigidTransform::from_quaternion(
                        &UnitQuaternion::from_quaternion(q),
                        Vector3::new(v[0], v[1], v[2]),
                    ));
                }
                "quadric" => {
                    let (q_text, box_text) = match rest.split_once("box") {
                        Some((q, b)) => (q, Some(b)),
                        None => (rest, None),
                    };
                    let quadric = parse_quadric(q_text).map_err(|e| err(e.to_string()))?;
                    let bounds = match box_text {
                        None => None,
                        Some(b) => {
                            let v = exact(nums(b)?, 6)?;
                            Some(LocalBox {
                                min: Vector3::new(v[0], v[1], v[2]),
                                max: Vector3::new(v[3], v[4], v[5]),
                            })
                        }
                    };
                    spec.quadrics.push(SceneQuadric { quadric, bounds });
                }
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Text form that [`SceneSpec::parse`] reads back.
    pub fn format(&self) -> String {
        let mut s = String::new();
        let n = &self.noise;
        let _ = writeln!(s, "seed {}", self.seed);
        let _ = writeln!(s, "odometry_noise {} {}", n.odometry_t, n.odometry_r.to_degrees());
        let _ = writeln!(s, "observation_noise {}", n.observation);
        let _ = writeln!(s, "depth_noise {}", n.depth);
        let _ = writeln!(s, "visibility_range {}", self.visibility_range);
        for p in &self.trajectory {
            let t = p.translation();
            let q = p.quaternion();
            let _ = writeln!(s, "pose {} {} {} {} {} {} {}", t.x, t.y, t.z, q.w, q.i, q.j, q.k);
        }
        for q in &self.quadrics {
            let _ = write!(s, "quadric {}", format_quadric(&q.quadric));
            if let Some(b) = q.bounds {
                let _ = write!(
                    s,
                    " box {} {} {} {} {} {}",
                    b.min.x, b.min.y, b.min.z, b.max.x, b.max.y, b.max.z
                );
            }
            s.push('\n');
        }
        s
    }
}
