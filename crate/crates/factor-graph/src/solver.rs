use nalgebra::DVector;

use crate::linear::{linearize, solve_normal_equations, LinearSystem};
use crate::{FactorGraph, GraphEstimate, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    GaussNewton,
    DogLeg,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub method: Method,
    pub max_iterations: usize,
    /// Stop once an accepted step lowers the cost by less than this fraction.
    pub relative_cost_tolerance: f64,
    /// Stop once the step norm falls below this.
    pub step_tolerance: f64,
    pub initial_trust_region: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: Method::DogLeg,
            max_iterations: 100,
            relative_cost_tolerance: 1e-9,
            step_tolerance: 1e-10,
            initial_trust_region: 1.0,
        }
    }
}

impl SolveOptions {
    pub fn gauss_newton() -> Self {
        Self {
            method: Method::GaussNewton,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ZeroGradient,
    RelativeDecrease,
    SmallStep,
    MaxIterations,
    /// A Gauss-Newton step increased the cost; the previous estimate is kept.
    CostIncreased,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub converged: bool,
    pub trust_region_final: f64,
    pub termination: Termination,
}

/// Minimise the graph cost from `init`, updating every variable by its own
/// retraction.
pub fn solve(
    graph: &FactorGraph,
    init: &GraphEstimate,
    opts: &SolveOptions,
) -> Result<(GraphEstimate, SolveReport)> {
    let mut x = init.clone();
    let mut system = linearize(graph, &x)?;
    let initial_cost = system.cost;
    let mut cost = initial_cost;
    let mut radius = opts.initial_trust_region;
    let mut iterations = 0;

    let termination = loop {
        if cost == 0.0 || system.b.iter().all(|v| *v == 0.0) {
            break Termination::ZeroGradient;
        }
        if iterations >= opts.max_iterations {
            break Termination::MaxIterations;
        }
        iterations += 1;
        let gn = solve_normal_equations(&system)?;

        let (next, next_cost) = match opts.method {
            Method::GaussNewton => {
                if gn.norm() < opts.step_tolerance {
                    break Termination::SmallStep;
                }
                match try_step(graph, &x, &system, &gn) {
                    Some((next, c)) if c <= cost => (next, c),
                    _ => break Termination::CostIncreased,
                }
            }
            Method::DogLeg => match dogleg_iteration(graph, &x, &system, &gn, &mut radius, opts) {
                Some(accepted) => accepted,
                None => break Termination::SmallStep,
            },
        };
        let decrease = (cost - next_cost) / cost;
        log::debug!("iteration {iterations}: cost {cost:.6e} -> {next_cost:.6e}, radius {radius:.3e}");
        x = next;
        cost = next_cost;
        if decrease < opts.relative_cost_tolerance {
            break Termination::RelativeDecrease;
        }
        system = linearize(graph, &x)?;
    };

    let report = SolveReport {
        iterations,
        initial_cost,
        final_cost: cost,
        converged: !matches!(
            termination,
            Termination::MaxIterations | Termination::CostIncreased
        ),
        trust_region_final: radius,
        termination,
    };
    Ok((x, report))
}

/// Shrink the trust region until a step lowers the cost. `None` once the
/// step becomes negligible.
fn dogleg_iteration(
    graph: &FactorGraph,
    x: &GraphEstimate,
    system: &LinearSystem,
    gn: &DVector<f64>,
    radius: &mut f64,
    opts: &SolveOptions,
) -> Option<(GraphEstimate, f64)> {
    let b = &system.b;
    let b_norm = b.norm();
    let curvature = system.quadratic_form(b);
    let cauchy = if curvature > 0.0 {
        b * (b.norm_squared() / curvature)
    } else {
        b * (f64::INFINITY)
    };
    loop {
        let step = dogleg_step(gn, &cauchy, b, b_norm, *radius);
        let step_norm = step.norm();
        if step_norm < opts.step_tolerance {
            return None;
        }
        let predicted = b.dot(&step) - 0.5 * system.quadratic_form(&step);
        if predicted <= 0.0 {
            return None;
        }
        let trial = try_step(graph, x, system, &step);
        let rho = match &trial {
            Some((_, c)) => (system.cost - c) / predicted,
            None => f64::NEG_INFINITY,
        };
        if rho < 0.25 {
            *radius *= 0.5;
        } else if rho > 0.75 {
            *radius *= 2.0;
        }
        if rho > 0.0 {
            return trial;
        }
    }
}

fn dogleg_step(
    gn: &DVector<f64>,
    cauchy: &DVector<f64>,
    b: &DVector<f64>,
    b_norm: f64,
    radius: f64,
) -> DVector<f64> {
    if gn.norm() <= radius {
        return gn.clone();
    }
    let cauchy_norm = cauchy.norm();
    if !cauchy_norm.is_finite() || cauchy_norm >= radius {
        return b * (radius / b_norm);
    }
    // Point on the segment cauchy → gn at distance `radius`.
    let d = gn - cauchy;
    let a = d.norm_squared();
    let bq = 2.0 * cauchy.dot(&d);
    let c = cauchy.norm_squared() - radius * radius;
    let tau = (-bq + (bq * bq - 4.0 * a * c).sqrt()) / (2.0 * a);
    cauchy + d * tau
}

fn try_step(
    graph: &FactorGraph,
    x: &GraphEstimate,
    system: &LinearSystem,
    step: &DVector<f64>,
) -> Option<(GraphEstimate, f64)> {
    let next = retract_all(x, system, step).ok()?;
    let cost = graph.cost(&next).ok()?;
    cost.is_finite().then_some((next, cost))
}

/// `x ⊞ δ` applied block by block in the system's ordering.
pub fn retract_all(
    x: &GraphEstimate,
    system: &LinearSystem,
    step: &DVector<f64>,
) -> Result<GraphEstimate> {
    let mut next = x.clone();
    for key in system.ordering.keys() {
        let offset = system.ordering.offset(key).expect("key in ordering");
        next.retract(*key, step.rows(offset, key.dim()))?;
    }
    Ok(next)
}
