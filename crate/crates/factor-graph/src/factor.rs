use nalgebra::{DMatrix, DVector, Matrix6, Vector6};
use quadric_core::{
    boxminus, boxminus_with_jacobian, lifting_matrix, se3, Quadric, RigidTransform, TangentVector,
};

use crate::{GraphError, GraphEstimate, Result, VariableKey};

/// `h(T_WC, π) ⊟ π̃`, the observation error in the class's reduced
/// coordinates. The sign satisfies `meas ⊞ r = prediction`.
pub fn observation_residual(
    pose: &RigidTransform,
    quadric: &Quadric,
    meas: &Quadric,
) -> Result<TangentVector> {
    Ok(boxminus(&quadric.expressed_in(pose), meas)?)
}

/// Jacobians of [`observation_residual`] with respect to `pose ⊞ ε` (dof×6)
/// and `quadric ⊞ δ` (dof×dof).
pub fn observation_jacobians(
    pose: &RigidTransform,
    quadric: &Quadric,
    meas: &Quadric,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (_, j_pose, j_quadric) = observation_linearization(pose, quadric, meas)?;
    Ok((j_pose, j_quadric))
}

fn observation_linearization(
    pose: &RigidTransform,
    quadric: &Quadric,
    meas: &Quadric,
) -> Result<(TangentVector, DMatrix<f64>, DMatrix<f64>)> {
    let prediction = quadric.expressed_in(pose);
    let (r, j_full) = boxminus_with_jacobian(&prediction, meas)?;
    // T_WC·exp(ε) moves the prediction to P·exp(−Ad_{P⁻¹}·ε).
    let ad = -prediction.pose().inverse().adjoint();
    let ad = DMatrix::from_column_slice(6, 6, ad.as_slice());
    let j_pose = j_full.columns(0, 6) * ad;
    let j_quadric = &j_full * lifting_matrix(quadric.class());
    Ok((r, j_pose, j_quadric))
}

/// `(T_from⁻¹·T_to) ⊟ meas`.
pub fn odometry_residual(
    from: &RigidTransform,
    to: &RigidTransform,
    meas: &RigidTransform,
) -> Result<Vector6<f64>> {
    Ok((from.inverse() * *to).local(meas)?)
}

/// Jacobians of [`odometry_residual`] with respect to `from ⊞ ε` and `to ⊞ ε`.
pub fn odometry_jacobians(
    from: &RigidTransform,
    to: &RigidTransform,
    meas: &RigidTransform,
) -> Result<(Matrix6<f64>, Matrix6<f64>)> {
    let relative = from.inverse() * *to;
    let r = relative.local(meas)?;
    let jr_inv = se3::right_jacobian_inv(&r);
    Ok((-jr_inv * relative.inverse().adjoint(), jr_inv))
}

/// `T ⊟ meas`.
pub fn prior_residual(pose: &RigidTransform, meas: &RigidTransform) -> Result<Vector6<f64>> {
    Ok(pose.local(meas)?)
}

/// Jacobian of [`prior_residual`] with respect to `pose ⊞ ε`.
pub fn prior_jacobian(pose: &RigidTransform, meas: &RigidTransform) -> Result<Matrix6<f64>> {
    Ok(se3::right_jacobian_inv(&prior_residual(pose, meas)?))
}

/// What a factor measures and which variables it touches.
#[derive(Debug, Clone, PartialEq)]
pub enum Measurement {
    Prior {
        pose: usize,
        value: RigidTransform,
    },
    Odometry {
        from: usize,
        to: usize,
        relative: RigidTransform,
    },
    /// A quadric measured in the sensor frame of `pose`.
    Observation {
        pose: usize,
        quadric: usize,
        observed: Quadric,
    },
}

impl Measurement {
    pub fn dim(&self) -> usize {
        match self {
            Measurement::Prior { .. } | Measurement::Odometry { .. } => 6,
            Measurement::Observation { observed, .. } => observed.class().dof(),
        }
    }

    pub fn keys(&self) -> Vec<VariableKey> {
        match self {
            Measurement::Prior { pose, .. } => vec![VariableKey::Pose(*pose)],
            Measurement::Odometry { from, to, .. } => {
                vec![VariableKey::Pose(*from), VariableKey::Pose(*to)]
            }
            Measurement::Observation {
                pose,
                quadric,
                observed,
            } => vec![
                VariableKey::Pose(*pose),
                VariableKey::Quadric(*quadric, observed.class()),
            ],
        }
    }
}

/// Huber loss on the whitened residual norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Huber {
    pub threshold: f64,
}

impl Huber {
    /// `ρ(s)` for squared whitened norm `s`; equals `s` inside the threshold.
    pub fn loss(&self, s: f64) -> f64 {
        let e = s.sqrt();
        if e <= self.threshold {
            s
        } else {
            2.0 * self.threshold * e - self.threshold * self.threshold
        }
    }

    /// `ρ'(s)`, the iteratively-reweighted least-squares weight.
    pub fn weight(&self, s: f64) -> f64 {
        let e = s.sqrt();
        if e <= self.threshold {
            1.0
        } else {
            self.threshold / e
        }
    }
}

/// A measurement with Gaussian noise `N(0, Σ)`; its cost is `½·rᵀΣ⁻¹r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    measurement: Measurement,
    covariance: DMatrix<f64>,
    sqrt_information: DMatrix<f64>,
    robust: Option<Huber>,
}

/// A factor's whitened residual and Jacobian blocks at the current estimate.
#[derive(Debug, Clone)]
pub struct LinearizedFactor {
    pub residual: DVector<f64>,
    pub blocks: Vec<(VariableKey, DMatrix<f64>)>,
    pub cost: f64,
}

impl Factor {
    pub fn new(measurement: Measurement, covariance: DMatrix<f64>) -> Result<Self> {
        let n = measurement.dim();
        if covariance.shape() != (n, n) {
            return Err(GraphError::CovarianceDimension {
                expected: n,
                rows: covariance.nrows(),
                cols: covariance.ncols(),
            });
        }
        let scale = covariance.amax();
        let symmetric = (&covariance - covariance.transpose()).amax() <= 1e-12 * scale;
        if !symmetric || !covariance.iter().all(|v| v.is_finite()) {
            return Err(GraphError::CovarianceNotPositiveDefinite);
        }
        let chol = covariance
            .clone()
            .cholesky()
            .ok_or(GraphError::CovarianceNotPositiveDefinite)?;
        let l = chol.l();
        let sqrt_information = l
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or(GraphError::CovarianceNotPositiveDefinite)?;
        Ok(Self {
            measurement,
            covariance,
            sqrt_information,
            robust: None,
        })
    }

    /// Factor with `Σ = σ²·I`.
    pub fn isotropic(measurement: Measurement, sigma: f64) -> Result<Self> {
        let n = measurement.dim();
        Self::new(measurement, DMatrix::identity(n, n) * (sigma * sigma))
    }

    pub fn prior(pose: usize, value: RigidTransform, covariance: DMatrix<f64>) -> Result<Self> {
        Self::new(Measurement::Prior { pose, value }, covariance)
    }

    pub fn odometry(
        from: usize,
        to: usize,
        relative: RigidTransform,
        covariance: DMatrix<f64>,
    ) -> Result<Self> {
        Self::new(Measurement::Odometry { from, to, relative }, covariance)
    }

    pub fn observation(
        pose: usize,
        quadric: usize,
        observed: Quadric,
        covariance: DMatrix<f64>,
    ) -> Result<Self> {
        Self::new(
            Measurement::Observation {
                pose,
                quadric,
                observed,
            },
            covariance,
        )
    }

    pub fn with_robust(mut self, robust: Option<Huber>) -> Self {
        self.robust = robust;
        self
    }

    pub fn measurement(&self) -> &Measurement {
        &self.measurement
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn robust(&self) -> Option<Huber> {
        self.robust
    }

    pub fn keys(&self) -> Vec<VariableKey> {
        self.measurement.keys()
    }

    /// Unwhitened residual at `estimate`.
    pub fn residual(&self, estimate: &GraphEstimate) -> Result<DVector<f64>> {
        Ok(match &self.measurement {
            Measurement::Prior { pose, value } => {
                let r = prior_residual(estimate.require_pose(*pose)?, value)?;
                DVector::from_column_slice(r.as_slice())
            }
            Measurement::Odometry { from, to, relative } => {
                let r = odometry_residual(
                    estimate.require_pose(*from)?,
                    estimate.require_pose(*to)?,
                    relative,
                )?;
                DVector::from_column_slice(r.as_slice())
            }
            Measurement::Observation {
                pose,
                quadric,
                observed,
            } => {
                let q = estimate.require_quadric(*quadric, observed.class())?;
                observation_residual(estimate.require_pose(*pose)?, q, observed)?.into_inner()
            }
        })
    }

    /// `½·ρ(rᵀΣ⁻¹r)`.
    pub fn cost(&self, estimate: &GraphEstimate) -> Result<f64> {
        let e = &self.sqrt_information * self.residual(estimate)?;
        Ok(0.5 * self.loss(e.norm_squared()))
    }

    fn loss(&self, s: f64) -> f64 {
        match self.robust {
            Some(h) => h.loss(s),
            None => s,
        }
    }

    pub fn linearize(&self, estimate: &GraphEstimate) -> Result<LinearizedFactor> {
        let keys = self.keys();
        let (r, jacobians): (DVector<f64>, Vec<DMatrix<f64>>) = match &self.measurement {
            Measurement::Prior { pose, value } => {
                let t = estimate.require_pose(*pose)?;
                let r = prior_residual(t, value)?;
                let j = se3::right_jacobian_inv(&r);
                (to_dvector(&r), vec![to_dmatrix(&j)])
            }
            Measurement::Odometry { from, to, relative } => {
                let (a, b) = (estimate.require_pose(*from)?, estimate.require_pose(*to)?);
                let r = odometry_residual(a, b, relative)?;
                let (ja, jb) = odometry_jacobians(a, b, relative)?;
                (to_dvector(&r), vec![to_dmatrix(&ja), to_dmatrix(&jb)])
            }
            Measurement::Observation {
                pose,
                quadric,
                observed,
            } => {
                let t = estimate.require_pose(*pose)?;
                let q = estimate.require_quadric(*quadric, observed.class())?;
                let (r, jp, jq) = observation_linearization(t, q, observed)?;
                (r.into_inner(), vec![jp, jq])
            }
        };
        let mut residual = &self.sqrt_information * r;
        let s = residual.norm_squared();
        let w = self.robust.map_or(1.0, |h| h.weight(s)).sqrt();
        residual *= w;
        let blocks = keys
            .into_iter()
            .zip(jacobians)
            .map(|(k, j)| (k, &self.sqrt_information * j * w))
            .collect();
        Ok(LinearizedFactor {
            residual,
            blocks,
            cost: 0.5 * self.loss(s),
        })
    }
}

fn to_dvector(v: &Vector6<f64>) -> DVector<f64> {
    DVector::from_column_slice(v.as_slice())
}

fn to_dmatrix(m: &Matrix6<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(6, 6, m.as_slice())
}
