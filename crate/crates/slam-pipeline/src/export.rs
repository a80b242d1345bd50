use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use quadric_core::{format_quadric, project_point, RigidTransform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Pipeline, PipelineError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorMode {
    /// One seeded random colour per landmark.
    Random { seed: u64 },
    /// Colour of the source pixel, grey where none was recorded.
    Image,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructedPoint {
    pub landmark: usize,
    pub position: Vector3<f64>,
    pub color: [u8; 3],
}

fn landmark_color(seed: u64, id: usize) -> [u8; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    [rng.random(), rng.random(), rng.random()]
}

/// Archived inlier points of every promoted landmark, moved to the world
/// frame and projected onto the landmark's surface.
pub fn reconstruction_points(pipeline: &Pipeline, mode: ColorMode) -> Result<Vec<ReconstructedPoint>> {
    let mut out = Vec::new();
    let mut any = false;
    for lm in pipeline.promoted_landmarks() {
        any = true;
        let random = match mode {
            ColorMode::Random { seed } => Some(landmark_color(seed, lm.id)),
            ColorMode::Image => None,
        };
        for entry in &lm.archive {
            let Some(pose) = pipeline.estimate().pose(entry.frame) else {
                continue;
            };
            for (i, p) in entry.points.iter().enumerate() {
                let position = project_point(&lm.quadric, &pose.transform_point(p))?;
                let color = random.unwrap_or_else(|| entry.colors.get(i).copied().unwrap_or([128; 3]));
                out.push(ReconstructedPoint {
                    landmark: lm.id,
                    position,
                    color,
                });
            }
        }
    }
    if !any {
        return Err(PipelineError::EmptyMap);
    }
    Ok(out)
}

/// ASCII PLY with per-vertex colour.
pub fn format_ply(points: &[ReconstructedPoint]) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n",
        points.len()
    );
    for p in points {
        let [r, g, b] = p.color;
        let _ = writeln!(s, "{} {} {} {r} {g} {b}", p.position.x, p.position.y, p.position.z);
    }
    s
}

pub fn export_reconstruction(pipeline: &Pipeline, path: &Path, mode: ColorMode) -> Result<()> {
    let points = reconstruction_points(pipeline, mode)?;
    std::fs::write(path, format_ply(&points))?;
    Ok(())
}

/// One `timestamp tx ty tz qx qy qz qw` line per pose.
pub fn format_trajectory(poses: &[(f64, RigidTransform)]) -> String {
    let mut s = String::new();
    for (t, pose) in poses {
        let p = pose.translation();
        let mut q = pose.quaternion().into_inner();
        if q.w < 0.0 {
            q = -q;
        }
        // Adding zero turns negative zeros into plain zeros.
        let c = |v: f64| v + 0.0;
        let _ = writeln!(
            s,
            "{t:.6} {} {} {} {} {} {} {}",
            c(p.x),
            c(p.y),
            c(p.z),
            c(q.i),
            c(q.j),
            c(q.k),
            c(q.w)
        );
    }
    s
}

pub fn parse_trajectory(text: &str) -> Result<Vec<(f64, RigidTransform)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| PipelineError::Trajectory { line: i + 1, message };
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|f| f.parse::<f64>().map_err(|e| err(format!("{f:?}: {e}"))))
            .collect::<Result<_>>()?;
        if v.len() != 8 {
            return Err(err(format!("expected 8 fields, got {}", v.len())));
        }
        let q = Quaternion::new(v[7], v[4], v[5], v[6]);
        if !(q.norm() > 0.0) {
            return Err(err("zero quaternion".into()));
        }
        let pose = RigidTransform::from_quaternion(
            &UnitQuaternion::from_quaternion(q),
            Vector3::new(v[1], v[2], v[3]),
        );
        out.push((v[0], pose));
    }
    Ok(out)
}

pub fn export_trajectory(pipeline: &Pipeline, path: &Path) -> Result<()> {
    std::fs::write(path, format_trajectory(&pipeline.trajectory()))?;
    Ok(())
}

/// Promoted landmarks in the one-line quadric text form.
pub fn format_map(pipeline: &Pipeline) -> String {
    pipeline
        .promoted_landmarks()
        .map(|l| format_quadric(&l.quadric) + "\n")
        .collect()
}

pub fn export_map(pipeline: &Pipeline, path: &Path) -> Result<()> {
    std::fs::write(path, format_map(pipeline))?;
    Ok(())
}
