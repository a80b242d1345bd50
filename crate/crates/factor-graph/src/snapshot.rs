//! Line-oriented text snapshot of a graph and its estimate.
//!
//! ```text
//! # quadric factor graph snapshot v1
//! POSE <i> tx ty tz qw qx qy qz
//! QUADRIC <i> <quadric>
//! PRIOR <i> tx ty tz qw qx qy qz <36 covariance entries> [huber <k>]
//! ODOMETRY <i> <j> tx ty tz qw qx qy qz <36 covariance entries> [huber <k>]
//! OBSERVATION <i> <j> <quadric> <dof² covariance entries> [huber <k>]
//! ```
//!
//! `<quadric>` is the eleven-token form of [`quadric_core::format_quadric`].
//! Covariances are row-major. Blank lines and lines starting with `#` are
//! ignored on import.

use std::fmt::Write;

use nalgebra::{DMatrix, Quaternion, UnitQuaternion, Vector3};
use quadric_core::{format_quadric, parse_quadric, RigidTransform};

use crate::{Factor, FactorGraph, GraphError, GraphEstimate, Huber, Measurement, Result};

pub const HEADER: &str = "# quadric factor graph snapshot v1";

pub fn write_snapshot(graph: &FactorGraph, estimate: &GraphEstimate) -> String {
    let mut out = String::new();
    writeln!(out, "{HEADER}").unwrap();
    for (i, pose) in estimate.poses() {
        writeln!(out, "POSE {i} {}", format_pose(pose)).unwrap();
    }
    for (i, q) in estimate.quadrics() {
        writeln!(out, "QUADRIC {i} {}", format_quadric(q)).unwrap();
    }
    for factor in graph.factors() {
        let head = match factor.measurement() {
            Measurement::Prior { pose, value } => format!("PRIOR {pose} {}", format_pose(value)),
            Measurement::Odometry { from, to, relative } => {
                format!("ODOMETRY {from} {to} {}", format_pose(relative))
            }
            Measurement::Observation {
                pose,
                quadric,
                observed,
            } => format!("OBSERVATION {pose} {quadric} {}", format_quadric(observed)),
        };
        let cov = factor.covariance();
        let mut line = head;
        for r in 0..cov.nrows() {
            for c in 0..cov.ncols() {
                write!(line, " {}", cov[(r, c)]).unwrap();
            }
        }
        if let Some(h) = factor.robust() {
            write!(line, " huber {}", h.threshold).unwrap();
        }
        writeln!(out, "{line}").unwrap();
    }
    out
}

pub fn read_snapshot(text: &str) -> Result<(FactorGraph, GraphEstimate)> {
    let mut graph = FactorGraph::new();
    let mut estimate = GraphEstimate::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fail = |message: String| GraphError::Snapshot {
            line: n + 1,
            message,
        };
        let mut tokens: Vec<&str> = line.split_whitespace().collect();
        let mut robust = None;
        if tokens.len() >= 2 && tokens[tokens.len() - 2] == "huber" {
            let k = parse_f64(tokens[tokens.len() - 1]).map_err(&fail)?;
            robust = Some(Huber { threshold: k });
            tokens.truncate(tokens.len() - 2);
        }
        let index = |i: usize| -> Result<usize> {
            tokens
                .get(i)
                .ok_or_else(|| fail("missing index".into()))?
                .parse()
                .map_err(|e| fail(format!("index: {e}")))
        };
        let numbers = |from: usize| -> Result<Vec<f64>> {
            tokens[from.min(tokens.len())..]
                .iter()
                .map(|t| parse_f64(t).map_err(&fail))
                .collect()
        };
        let quadric_at = |from: usize| -> Result<quadric_core::Quadric> {
            if tokens.len() < from + 11 {
                return Err(fail("truncated quadric".into()));
            }
            parse_quadric(&tokens[from..from + 11].join(" ")).map_err(|e| fail(e.to_string()))
        };
        match tokens[0] {
            "POSE" => {
                let v = numbers(2)?;
                estimate.insert_pose(index(1)?, pose_from(&v).map_err(&fail)?);
            }
            "QUADRIC" => {
                if tokens.len() != 13 {
                    return Err(fail("QUADRIC takes an index and 11 tokens".into()));
                }
                estimate.insert_quadric(index(1)?, quadric_at(2)?);
            }
            "PRIOR" => {
                let v = numbers(2)?;
                let (pose, cov) = pose_and_covariance(&v).map_err(&fail)?;
                graph.add(Factor::prior(index(1)?, pose, cov)?.with_robust(robust));
            }
            "ODOMETRY" => {
                let v = numbers(3)?;
                let (pose, cov) = pose_and_covariance(&v).map_err(&fail)?;
                graph.add(Factor::odometry(index(1)?, index(2)?, pose, cov)?.with_robust(robust));
            }
            "OBSERVATION" => {
                let observed = quadric_at(3)?;
                let v = numbers(14)?;
                let dof = observed.class().dof();
                if v.len() != dof * dof {
                    return Err(fail(format!("expected {} covariance entries", dof * dof)));
                }
                let cov = DMatrix::from_row_slice(dof, dof, &v);
                graph.add(
                    Factor::observation(index(1)?, index(2)?, observed, cov)?.with_robust(robust),
                );
            }
            other => return Err(fail(format!("unknown record {other:?}"))),
        }
    }
    Ok((graph, estimate))
}

fn format_pose(p: &RigidTransform) -> String {
    let t = p.translation();
    let q = p.quaternion();
    format!("{} {} {} {} {} {} {}", t.x, t.y, t.z, q.w, q.i, q.j, q.k)
}

fn parse_f64(t: &str) -> std::result::Result<f64, String> {
    t.parse().map_err(|e| format!("{t:?}: {e}"))
}

fn pose_from(v: &[f64]) -> std::result::Result<RigidTransform, String> {
    if v.len() != 7 {
        return Err(format!("expected 7 pose numbers, got {}", v.len()));
    }
    let q = Quaternion::new(v[3], v[4], v[5], v[6]);
    if (q.norm() - 1.0).abs() > 1e-6 {
        return Err(format!("quaternion norm {} is not 1", q.norm()));
    }
    Ok(RigidTransform::from_quaternion(
        &UnitQuaternion::from_quaternion(q),
        Vector3::new(v[0], v[1], v[2]),
    ))
}

fn pose_and_covariance(v: &[f64]) -> std::result::Result<(RigidTransform, DMatrix<f64>), String> {
    if v.len() != 7 + 36 {
        return Err(format!("expected 43 numbers, got {}", v.len()));
    }
    Ok((pose_from(&v[..7])?, DMatrix::from_row_slice(6, 6, &v[7..])))
}
