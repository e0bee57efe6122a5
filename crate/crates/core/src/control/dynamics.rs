use super::{CostateMode, PlannerProblem};
use crate::economy::{
    demand_gaps, filter_demand, inflow_unchecked, routed_output, ControlValue, FilteredDemand,
};
use crate::error::{check_dim, EmtError, Result};
use crate::needspace::weighted_sum;

/// Co-state values at one instant, tagged with their convention.
#[derive(Debug, Clone, PartialEq)]
pub struct CostateValue {
    pub mode: CostateMode,
    pub values: Vec<f64>,
}

impl CostateValue {
    pub fn present(values: Vec<f64>) -> Self {
        Self {
            mode: CostateMode::PresentValue,
            values,
        }
    }

    pub fn current(values: Vec<f64>) -> Self {
        Self {
            mode: CostateMode::CurrentValue,
            values,
        }
    }

    pub fn to_present_value(&self, t: f64, rho: f64) -> Result<CostateValue> {
        match self.mode {
            CostateMode::PresentValue => Ok(self.clone()),
            CostateMode::CurrentValue => {
                let f = (-rho * t).exp();
                Ok(CostateValue::present(
                    self.values.iter().map(|v| v * f).collect(),
                ))
            }
            CostateMode::PaperLiteral => Err(EmtError::ContractViolation(
                "paper_literal co-states have no present-value transform".into(),
            )),
        }
    }
}

fn filtered(x: &[f64], problem: &PlannerProblem) -> FilteredDemand {
    filter_demand(&demand_gaps(x, &problem.needs), &problem.needs)
}

pub(crate) fn check_ctrl_shape(ctrl: &ControlValue, problem: &PlannerProblem) -> Result<()> {
    use super::ControlMode::*;
    match (problem.solver.control_mode, ctrl) {
        (ScalarBounded, ControlValue::Scalar(_)) => Ok(()),
        (AllocationSimplex, ControlValue::Allocation(v)) => check_dim(problem.dim(), v.len()),
        _ => Err(EmtError::ContractViolation(format!(
            "control value does not match control mode {}",
            problem.solver.control_mode.as_str()
        ))),
    }
}

/// `dx_i/dt = Φ_i(ctrl) - δ_i x_i`.
pub fn state_rhs(
    x: &[f64],
    ctrl: &ControlValue,
    t: f64,
    problem: &PlannerProblem,
) -> Result<Vec<f64>> {
    check_dim(problem.dim(), x.len())?;
    check_ctrl_shape(ctrl, problem)?;
    Ok(state_rhs_unchecked(x, ctrl, t, problem))
}

pub(crate) fn state_rhs_unchecked(
    x: &[f64],
    ctrl: &ControlValue,
    t: f64,
    problem: &PlannerProblem,
) -> Vec<f64> {
    let f = filtered(x, problem);
    let inflow = inflow_unchecked(
        problem.efficiency.at(t),
        &problem.needs,
        ctrl,
        problem.share,
        &f,
    );
    inflow
        .iter()
        .zip(x)
        .zip(&problem.needs)
        .map(|((phi, xi), n)| phi - n.delta * xi)
        .collect()
}

/// Co-state rates for the given convention. Utility is linear, so
/// `∂U/∂x_i = w_i`; the inflow does not depend on `x` away from the demand
/// gate.
pub fn costate_rhs(
    x: &[f64],
    costate: &[f64],
    t: f64,
    mode: CostateMode,
    problem: &PlannerProblem,
) -> Result<Vec<f64>> {
    check_dim(problem.dim(), x.len())?;
    check_dim(problem.dim(), costate.len())?;
    Ok(costate_rhs_unchecked(costate, t, mode, problem))
}

pub(crate) fn costate_rhs_unchecked(
    costate: &[f64],
    t: f64,
    mode: CostateMode,
    problem: &PlannerProblem,
) -> Vec<f64> {
    let rho = problem.solver.rho;
    let disc = (-rho * t).exp();
    costate
        .iter()
        .zip(&problem.needs)
        .map(|(&l, n)| match mode {
            CostateMode::PresentValue => -disc * n.weight + n.delta * l,
            CostateMode::CurrentValue => (rho + n.delta) * l - n.weight,
            CostateMode::PaperLiteral => rho * l - disc * n.weight + n.delta * l,
        })
        .collect()
}

/// `H = e^{-ρt} U(x) + Σ λ_i (Φ_i(ctrl) - δ_i x_i)` with present-value λ.
pub fn hamiltonian(
    x: &[f64],
    ctrl: &ControlValue,
    costate: &CostateValue,
    t: f64,
    problem: &PlannerProblem,
) -> Result<f64> {
    if costate.mode != CostateMode::PresentValue {
        return Err(EmtError::ContractViolation(format!(
            "hamiltonian expects present_value co-states, got {}",
            costate.mode.as_str()
        )));
    }
    check_dim(problem.dim(), costate.values.len())?;
    let rates = state_rhs(x, ctrl, t, problem)?;
    let w: Vec<f64> = problem.needs.iter().map(|n| n.weight).collect();
    Ok((-problem.solver.rho * t).exp() * weighted_sum(&w, x)
        + weighted_sum(&costate.values, &rates))
}

/// The control-dependent part of H, `Σ λ_i Φ_i(ctrl)`, in whatever scale
/// `costate` is expressed.
pub(crate) fn control_value_of(
    ctrl: &ControlValue,
    costate: &[f64],
    efficiency: f64,
    f: &FilteredDemand,
    problem: &PlannerProblem,
) -> f64 {
    let inflow = inflow_unchecked(efficiency, &problem.needs, ctrl, problem.share, f);
    weighted_sum(costate, &inflow)
}

/// Gradient of H with respect to the control.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlGradient {
    Smooth(Vec<f64>),
    /// Componentwise subdifferential `[lower, upper]` where the share has a
    /// kink.
    Subgradient {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

impl ControlGradient {
    pub fn smooth(&self) -> Option<&[f64]> {
        match self {
            ControlGradient::Smooth(g) => Some(g),
            ControlGradient::Subgradient { .. } => None,
        }
    }
}

/// Per-need marginal value `λ_i a φ_i s'(y_i)` for open needs, and the
/// matching kink interval for the linear share.
fn marginal_terms(
    costate: &[f64],
    ctrl: &ControlValue,
    efficiency: f64,
    f: &FilteredDemand,
    problem: &PlannerProblem,
) -> Vec<(f64, f64)> {
    let eta = problem.share.eta();
    (0..problem.dim())
        .map(|i| {
            if !f.is_open(i) {
                return (0.0, 0.0);
            }
            let scale = costate[i] * efficiency * problem.needs[i].effectiveness;
            let y = routed_output(ctrl, f, i);
            let d = scale * problem.share.derivative(y);
            if !problem.share.is_smooth() && (eta * y - 1.0).abs() <= 1e-12 {
                // Left derivative is η, right derivative is 0.
                let full = scale * eta;
                (full.min(0.0), full.max(0.0))
            } else {
                (d, d)
            }
        })
        .collect()
}

/// `∂H/∂ctrl = Σ λ_i ∂Φ_i/∂ctrl`, analytic.
pub fn dh_dcontrol(
    x: &[f64],
    ctrl: &ControlValue,
    costate: &[f64],
    t: f64,
    problem: &PlannerProblem,
) -> Result<ControlGradient> {
    check_dim(problem.dim(), x.len())?;
    check_dim(problem.dim(), costate.len())?;
    check_ctrl_shape(ctrl, problem)?;
    let f = filtered(x, problem);
    let terms = marginal_terms(costate, ctrl, problem.efficiency.at(t), &f, problem);
    let (lower, upper): (Vec<f64>, Vec<f64>) = match ctrl {
        ControlValue::Allocation(_) => terms.into_iter().unzip(),
        ControlValue::Scalar(_) => {
            let (lo, hi) = terms
                .iter()
                .enumerate()
                .fold((0.0, 0.0), |(lo, hi), (i, (a, b))| {
                    (lo + f.split[i] * a, hi + f.split[i] * b)
                });
            (vec![lo], vec![hi])
        }
    };
    if lower == upper {
        Ok(ControlGradient::Smooth(lower))
    } else {
        Ok(ControlGradient::Subgradient { lower, upper })
    }
}

/// Dimensionless first-order optimality residual of `ctrl` at one instant.
///
/// Allocation mode: spread of marginal values among funded needs plus any
/// unfunded need whose marginal value exceeds the funded ones, relative to
/// the largest funded marginal value, plus the unspent budget fraction
/// weighted by its marginal value. Scalar mode: `|∂H/∂Y|` at interior
/// points and the inward-pointing part at the bounds, relative to the
/// gradient scale. The linear share uses the relative Hamiltonian gap to the
/// maximizer instead.
pub fn stationarity_residual(
    x: &[f64],
    ctrl: &ControlValue,
    costate: &[f64],
    t: f64,
    problem: &PlannerProblem,
) -> Result<f64> {
    check_dim(problem.dim(), x.len())?;
    check_dim(problem.dim(), costate.len())?;
    check_ctrl_shape(ctrl, problem)?;
    let f = filtered(x, problem);
    let a = problem.efficiency.at(t);

    if !problem.share.is_smooth() {
        let best = super::maximize_hamiltonian(x, costate, t, problem)?;
        let h_best = control_value_of(&best, costate, a, &f, problem);
        let h_ctrl = control_value_of(ctrl, costate, a, &f, problem);
        return Ok(if h_best.abs() > 0.0 {
            ((h_best - h_ctrl) / h_best.abs()).max(0.0)
        } else {
            0.0
        });
    }

    let terms = marginal_terms(costate, ctrl, a, &f, problem);
    let y_max = problem.solver.y_max;
    match ctrl {
        ControlValue::Allocation(y) => {
            let funded: Vec<f64> = (0..y.len())
                .filter(|&i| y[i] > 0.0 && f.is_open(i))
                .map(|i| terms[i].0)
                .collect();
            let best_unfunded = (0..y.len())
                .filter(|&i| !(y[i] > 0.0 && f.is_open(i)))
                .map(|i| terms[i].0)
                .fold(f64::NEG_INFINITY, f64::max);
            if funded.is_empty() {
                // Nothing funded is optimal only if no marginal value is positive.
                return Ok(if best_unfunded > 0.0 { 1.0 } else { 0.0 });
            }
            let hi = funded.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = funded.iter().copied().fold(f64::INFINITY, f64::min);
            if hi <= 0.0 {
                // A flat Hamiltonian (all marginal values zero) is maximized
                // by any allocation.
                return Ok(if lo < 0.0 || best_unfunded > 0.0 {
                    1.0
                } else {
                    0.0
                });
            }
            let mut r = (hi - lo) / hi;
            r = r.max((best_unfunded - lo).max(0.0) / hi);
            let slack = y_max - y.iter().sum::<f64>();
            if slack > 0.0 {
                // Complementary slackness: unspent budget times its marginal value.
                r = r.max(lo.max(0.0) / hi * slack / y_max);
            }
            Ok(r)
        }
        ControlValue::Scalar(yv) => {
            let g: f64 = (0..terms.len()).map(|i| f.split[i] * terms[i].0).sum();
            let scale: f64 = (0..terms.len())
                .map(|i| {
                    f.split[i]
                        * (costate[i] * a * problem.needs[i].effectiveness * problem.share.eta())
                            .abs()
                })
                .sum();
            if scale == 0.0 {
                return Ok(0.0);
            }
            let r = if *yv >= y_max {
                (-g).max(0.0)
            } else if *yv <= 0.0 {
                g.max(0.0)
            } else {
                g.abs()
            };
            Ok(r / scale)
        }
    }
}
