use super::dynamics::stationarity_residual;
use super::integrate::{integrate_backward, integrate_forward, uniform_grid};
use super::maximize::maximize_filtered;
use super::{ControlPath, CostatePath, PlannerProblem, StatePath, TrajectoryBundle};
use crate::economy::{demand_gaps, filter_demand, ShareFunction};
use crate::error::{EmtError, Result};
use crate::needspace::weighted_sum;

/// Trapezoid-rule `∫ e^{-ρt} U(x(t)) dt` with its running value.
pub fn discounted_utility(state: &StatePath, weights: &[f64], rho: f64) -> (f64, Vec<f64>) {
    let times = state.series.times();
    let f: Vec<f64> = times
        .iter()
        .zip(state.series.rows())
        .map(|(t, x)| (-rho * t).exp() * weighted_sum(weights, x))
        .collect();
    let mut running = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    running.push(0.0);
    for k in 1..f.len() {
        acc += 0.5 * (times[k] - times[k - 1]) * (f[k] + f[k - 1]);
        running.push(acc);
    }
    (acc, running)
}

fn best_response(
    problem: &PlannerProblem,
    state: &StatePath,
    costate: &CostatePath,
) -> ControlPath {
    let times = state.series.times().to_vec();
    let mut out = ControlPath::zeros(times.clone(), problem.solver.control_mode, problem.dim());
    for (k, t) in times.iter().enumerate() {
        let x = state.series.row(k);
        let f = filter_demand(&demand_gaps(x, &problem.needs), &problem.needs);
        let ctrl = maximize_filtered(
            costate.series.row(k),
            problem.efficiency.at(*t),
            &f,
            problem,
        );
        out.series.row_mut(k).copy_from_slice(ctrl.as_slice());
    }
    out
}

/// Forward–backward sweep on `[0, T]` with zero terminal co-state.
///
/// Starts from the zero control and repeats: integrate the state forward,
/// integrate the co-state backward, maximize the Hamiltonian pointwise, and
/// relax `u ← θ·u_new + (1-θ)·u`. Stops once the sup-norm change of the
/// control falls below `tol`. Running out of iterations is reported through
/// `converged = false`, not as an error.
pub fn fbsm_solve(problem: &PlannerProblem) -> Result<TrajectoryBundle> {
    problem.validate()?;
    let cfg = &problem.solver;
    let x0: Vec<f64> = problem.needs.iter().map(|n| n.initial).collect();
    let weights: Vec<f64> = problem.needs.iter().map(|n| n.weight).collect();
    let terminal = vec![0.0; problem.dim()];
    let times = uniform_grid(cfg.horizon, cfg.steps);
    let theta = cfg.relaxation;

    let mut control = ControlPath::zeros(times, cfg.control_mode, problem.dim());
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut change = f64::INFINITY;

    while iterations < cfg.max_iter {
        iterations += 1;
        let state = integrate_forward(problem, &x0, &control)?;
        history.push(discounted_utility(&state, &weights, cfg.rho).0);
        let costate = integrate_backward(problem, cfg.costate_mode, &terminal, &state)?;
        let target = best_response(problem, &state, &costate);

        change = 0.0;
        for k in 0..control.series.len() {
            let row_new = target.series.row(k);
            for (u, v) in control.series.row_mut(k).iter_mut().zip(row_new) {
                let relaxed = theta * v + (1.0 - theta) * *u;
                change = change.max((relaxed - *u).abs());
                *u = relaxed;
            }
        }
        if !change.is_finite() {
            return Err(EmtError::IntegrationFailure {
                index: 0,
                time: 0.0,
                reason: format!("control update diverged at sweep {iterations}"),
            });
        }
        if change < cfg.tol {
            converged = true;
            break;
        }
    }

    let state = integrate_forward(problem, &x0, &control)?;
    let costate = integrate_backward(problem, cfg.costate_mode, &terminal, &state)?;
    let (utility_integral, running_utility) = discounted_utility(&state, &weights, cfg.rho);
    let hamiltonian_residual = (0..state.series.len())
        .map(|k| {
            stationarity_residual(
                state.series.row(k),
                &control.value_at(k),
                costate.series.row(k),
                state.series.times()[k],
                problem,
            )
        })
        .collect::<Result<Vec<f64>>>()?;

    Ok(TrajectoryBundle {
        state,
        costate,
        control,
        utility_integral,
        running_utility,
        hamiltonian_residual,
        iterations,
        converged,
        final_change: change,
        utility_history: history,
    })
}

/// Closed-form steady state of a single need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub satisfaction: f64,
    pub costate: f64,
    pub control: f64,
}

/// Stationary point of the one-need current-value system with the
/// asymptotic efficiency `a = 1`: `μ* = w/(ρ+δ)`, `Y*` maximizes H given
/// `μ*`, and `x* = Φ(Y*)/δ`. The demand gate is not applied.
pub fn lq_steady_state(
    weight: f64,
    rho: f64,
    delta: f64,
    effectiveness: f64,
    share: ShareFunction,
    y_max: f64,
) -> Result<SteadyState> {
    if !(delta > 0.0) {
        return Err(EmtError::InvalidParameter(format!(
            "no steady state without decay (delta = {delta})"
        )));
    }
    if !(rho > 0.0) {
        return Err(EmtError::InvalidParameter(format!(
            "rho must be positive, got {rho}"
        )));
    }
    let costate = weight / (rho + delta);
    let control = if costate > 0.0 && effectiveness > 0.0 {
        y_max
    } else {
        0.0
    };
    Ok(SteadyState {
        satisfaction: effectiveness * share.value(control) / delta,
        costate,
        control,
    })
}
