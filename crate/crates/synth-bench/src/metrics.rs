use std::fmt::Write as _;

use nalgebra::{Matrix3, Vector3};
use quadric_core::{boxminus, Quadric, RigidTransform};

use crate::{Result, SynthError};

/// Rotation and translation minimising `Σ‖R·a_i + t − b_i‖²`.
pub fn align_translations(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> (Matrix3<f64>, Vector3<f64>) {
    let n = a.len().max(1) as f64;
    let ca = a.iter().sum::<Vector3<f64>>() / n;
    let cb = b.iter().sum::<Vector3<f64>>() / n;
    let h: Matrix3<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - ca) * (y - cb).transpose())
        .sum();
    let svd = h.svd(true, true);
    let (u, vt) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
    let d = (vt.transpose() * u.transpose()).determinant().signum();
    let r = vt.transpose() * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose();
    (r, cb - r * ca)
}

/// Absolute trajectory error: RMSE of camera positions after the best rigid
/// alignment of the estimate onto the ground truth.
pub fn evaluate_ate(estimated: &[RigidTransform], truth: &[RigidTransform]) -> Result<f64> {
    if estimated.len() != truth.len() {
        return Err(SynthError::LengthMismatch {
            estimated: estimated.len(),
            truth: truth.len(),
        });
    }
    if estimated.is_empty() {
        return Ok(0.0);
    }
    let a: Vec<Vector3<f64>> = estimated.iter().map(|p| *p.translation()).collect();
    let b: Vec<Vector3<f64>> = truth.iter().map(|p| *p.translation()).collect();
    let (r, t) = align_translations(&a, &b);
    let sq: f64 = a.iter().zip(&b).map(|(x, y)| (r * x + t - y).norm_squared()).sum();
    Ok((sq / a.len() as f64).sqrt())
}

/// Norm of the manifold difference between an estimate and the truth.
pub fn quadric_error(estimate: &Quadric, truth: &Quadric) -> Result<f64> {
    Ok(boxminus(estimate, truth)?.norm())
}

/// Named scalar results, printable as a table or as `metric value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics {
    pub entries: Vec<(String, f64)>,
}

impl Metrics {
    pub fn push(&mut self, name: impl Into<String>, value: f64) {
        self.entries.push((name.into(), value));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|e| e.1)
    }

    pub fn format_lines(&self) -> String {
        self.entries.iter().map(|(n, v)| format!("{n} {v}\n")).collect()
    }

    pub fn format_table(&self) -> String {
        let width = self.entries.iter().map(|(n, _)| n.len()).max().unwrap_or(6).max(6);
        let mut s = format!("{:<width$}  value\n", "metric");
        for (n, v) in &self.entries {
            let _ = writeln!(s, "{n:<width$}  {v:.6}");
        }
        s
    }
}
