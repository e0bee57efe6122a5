//! Classical fixed-step RK4 for the state (forward) and co-state (backward)
//! systems.
//!
//! The control is held constant over each grid interval at its left-endpoint
//! value; time-varying coefficients are evaluated at the RK stage times.

use super::dynamics::{costate_rhs_unchecked, state_rhs_unchecked};
use super::{ControlPath, CostateMode, CostatePath, PlannerProblem, Series, StatePath};
use crate::error::{check_dim, EmtError, Result};

/// `steps + 1` equally spaced points on `[0, horizon]`, last point exactly
/// `horizon`.
pub fn uniform_grid(horizon: f64, steps: usize) -> Vec<f64> {
    let h = horizon / steps as f64;
    let mut t: Vec<f64> = (0..=steps).map(|k| k as f64 * h).collect();
    if let Some(last) = t.last_mut() {
        *last = horizon;
    }
    t
}

fn axpy(base: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    base.iter().zip(k).map(|(b, d)| b + h * d).collect()
}

fn failure(index: usize, time: f64, what: &str) -> EmtError {
    EmtError::IntegrationFailure {
        index,
        time,
        reason: format!("non-finite {what}"),
    }
}

/// Integrates the state forward from `x0` under `control`, clamping every
/// step to `[0, sat_max]` and counting the clamped components.
pub fn integrate_forward(
    problem: &PlannerProblem,
    x0: &[f64],
    control: &ControlPath,
) -> Result<StatePath> {
    let n = problem.dim();
    check_dim(n, x0.len())?;
    if control.mode != problem.solver.control_mode {
        return Err(EmtError::ContractViolation(format!(
            "control path is {} but the problem is {}",
            control.mode.as_str(),
            problem.solver.control_mode.as_str()
        )));
    }
    let times = control.series.times().to_vec();
    if times.len() < 2 {
        return Err(EmtError::GridMismatch(
            "grid needs at least two points".into(),
        ));
    }
    let sat_max = problem.sat_max;
    let mut series = Series::zeros(times.clone(), n);
    series.row_mut(0).copy_from_slice(x0);
    let mut clamp_events = 0;

    for k in 0..times.len() - 1 {
        let t = times[k];
        let h = times[k + 1] - t;
        let ctrl = control.value_at(k);
        let x = series.row(k).to_vec();
        let k1 = state_rhs_unchecked(&x, &ctrl, t, problem);
        let k2 = state_rhs_unchecked(&axpy(&x, 0.5 * h, &k1), &ctrl, t + 0.5 * h, problem);
        let k3 = state_rhs_unchecked(&axpy(&x, 0.5 * h, &k2), &ctrl, t + 0.5 * h, problem);
        let k4 = state_rhs_unchecked(&axpy(&x, h, &k3), &ctrl, t + h, problem);
        let next = series.row_mut(k + 1);
        for i in 0..n {
            let v = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if !v.is_finite() {
                return Err(failure(k + 1, times[k + 1], "state"));
            }
            next[i] = if v < 0.0 {
                clamp_events += 1;
                0.0
            } else if v > sat_max {
                clamp_events += 1;
                sat_max
            } else {
                v
            };
        }
    }
    Ok(StatePath {
        series,
        sat_max,
        clamp_events,
    })
}

/// Integrates the co-state backward from `terminal` at `t = T`. The state
/// enters the right-hand side at stage times through linear interpolation.
pub fn integrate_backward(
    problem: &PlannerProblem,
    mode: CostateMode,
    terminal: &[f64],
    state: &StatePath,
) -> Result<CostatePath> {
    let n = problem.dim();
    check_dim(n, terminal.len())?;
    check_dim(n, state.series.dim())?;
    let times = state.series.times().to_vec();
    let last = times.len() - 1;
    let mut series = Series::zeros(times.clone(), n);
    series.row_mut(last).copy_from_slice(terminal);

    for k in (0..last).rev() {
        let t1 = times[k + 1];
        let h = t1 - times[k];
        let lam = series.row(k + 1).to_vec();
        let k1 = costate_rhs_unchecked(&lam, t1, mode, problem);
        let k2 = costate_rhs_unchecked(&axpy(&lam, -0.5 * h, &k1), t1 - 0.5 * h, mode, problem);
        let k3 = costate_rhs_unchecked(&axpy(&lam, -0.5 * h, &k2), t1 - 0.5 * h, mode, problem);
        let k4 = costate_rhs_unchecked(&axpy(&lam, -h, &k3), times[k], mode, problem);
        let row = series.row_mut(k);
        for i in 0..n {
            let v = lam[i] - h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if !v.is_finite() {
                return Err(failure(k, times[k], "co-state"));
            }
            row[i] = v;
        }
    }
    Ok(CostatePath { series, mode })
}
