use super::dynamics::control_value_of;
use super::{ControlMode, PlannerProblem};
use crate::economy::{demand_gaps, filter_demand, ControlValue, FilteredDemand, ShareFunction};
use crate::error::{check_dim, EmtError, Result};

/// Maximizes H over the admissible control set at one instant.
///
/// Only the ratios of the co-state entries matter, so present- and
/// current-value co-states give the same control. If no open need has a
/// positive shadow price the zero control is returned.
pub fn maximize_hamiltonian(
    x: &[f64],
    costate: &[f64],
    t: f64,
    problem: &PlannerProblem,
) -> Result<ControlValue> {
    check_dim(problem.dim(), x.len())?;
    check_dim(problem.dim(), costate.len())?;
    if let Some(i) = costate.iter().position(|v| !v.is_finite()) {
        return Err(EmtError::InvalidInput(format!(
            "co-state entry {i} is not finite"
        )));
    }
    let f = filter_demand(&demand_gaps(x, &problem.needs), &problem.needs);
    let a = problem.efficiency.at(t);
    Ok(maximize_filtered(costate, a, &f, problem))
}

pub(crate) fn maximize_filtered(
    costate: &[f64],
    efficiency: f64,
    f: &FilteredDemand,
    problem: &PlannerProblem,
) -> ControlValue {
    let y_max = problem.solver.y_max;
    match problem.solver.control_mode {
        ControlMode::AllocationSimplex => {
            // Marginal value at zero allocation for each open need.
            let gains: Vec<f64> = (0..problem.dim())
                .map(|i| {
                    if f.is_open(i) {
                        costate[i]
                            * efficiency
                            * problem.needs[i].effectiveness
                            * problem.share.eta()
                    } else {
                        0.0
                    }
                })
                .collect();
            let y = match problem.share {
                ShareFunction::Saturating { eta } => waterfill_saturating(&gains, eta, y_max),
                ShareFunction::Linear { eta } => fill_linear(&gains, eta, y_max),
            };
            ControlValue::Allocation(y)
        }
        ControlMode::ScalarBounded => {
            ControlValue::Scalar(maximize_scalar(costate, efficiency, f, problem))
        }
    }
}

/// Maximizes `Σ g_i (1 - e^{-η y_i}) / η` subject to `Σ y_i <= budget`.
///
/// Needs are taken in decreasing order of `g`; with the top `k` funded the
/// common marginal value is `ν = exp((Σ ln g_j - η·budget) / k)` and each
/// funded need gets `y_j = ln(g_j / ν) / η`. The first `k` whose successor
/// satisfies `g_{k+1} <= ν` is optimal.
pub(crate) fn waterfill_saturating(gains: &[f64], eta: f64, budget: f64) -> Vec<f64> {
    let mut y = vec![0.0; gains.len()];
    let mut order: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0).collect();
    if order.is_empty() || budget <= 0.0 {
        return y;
    }
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(a.cmp(&b)));

    let mut sum_ln = 0.0;
    let mut ln_nu = 0.0;
    let mut active = 0;
    for (k, &i) in order.iter().enumerate() {
        sum_ln += gains[i].ln();
        ln_nu = (sum_ln - eta * budget) / (k + 1) as f64;
        active = k + 1;
        match order.get(k + 1) {
            Some(&next) if gains[next].ln() > ln_nu => continue,
            _ => break,
        }
    }
    for &i in &order[..active] {
        y[i] = ((gains[i].ln() - ln_nu) / eta).max(0.0);
    }
    y
}

/// Linear share `min(ηy, 1)`: H is piecewise linear, so fund needs in
/// decreasing order of `g` up to saturation at `1/η`. Tied needs share
/// whatever budget is left equally.
pub(crate) fn fill_linear(gains: &[f64], eta: f64, budget: f64) -> Vec<f64> {
    let mut y = vec![0.0; gains.len()];
    let mut order: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0).collect();
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(a.cmp(&b)));
    let cap = 1.0 / eta;
    let mut left = budget;
    let mut start = 0;
    while start < order.len() && left > 0.0 {
        let g = gains[order[start]];
        let end = order[start..]
            .iter()
            .position(|&i| gains[i] != g)
            .map_or(order.len(), |p| start + p);
        let group = &order[start..end];
        let need = cap * group.len() as f64;
        let each = if left >= need {
            cap
        } else {
            left / group.len() as f64
        };
        for &i in group {
            y[i] = each;
        }
        left -= each * group.len() as f64;
        start = end;
    }
    y
}

fn maximize_scalar(
    costate: &[f64],
    efficiency: f64,
    f: &FilteredDemand,
    problem: &PlannerProblem,
) -> f64 {
    let y_max = problem.solver.y_max;
    let any_positive = (0..problem.dim()).any(|i| f.is_open(i) && costate[i] > 0.0);
    if !any_positive {
        return 0.0;
    }
    let value =
        |y: f64| control_value_of(&ControlValue::Scalar(y), costate, efficiency, f, problem);
    let slope = |y: f64| -> f64 {
        (0..problem.dim())
            .filter(|&i| f.is_open(i))
            .map(|i| {
                let s = f.split[i];
                costate[i]
                    * efficiency
                    * problem.needs[i].effectiveness
                    * s
                    * problem.share.derivative(s * y)
            })
            .sum()
    };

    let mut candidates = vec![y_max, 0.0];
    if slope(0.0) > 0.0 && slope(y_max) < 0.0 {
        let (mut lo, mut hi) = (0.0, y_max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * y_max {
                break;
            }
        }
        candidates.insert(0, 0.5 * (lo + hi));
    }
    // Earlier candidates win ties: interior root, then the upper bound.
    let mut best = candidates[0];
    let mut best_val = value(best);
    for &c in &candidates[1..] {
        let v = value(c);
        if v > best_val {
            best = c;
            best_val = v;
        }
    }
    best
}
