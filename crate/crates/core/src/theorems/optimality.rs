use super::CheckCertificate;
use crate::control::{PlannerProblem, TrajectoryBundle};
use crate::economy::{NeedParams, ShareFunction};
use crate::error::Result;
use crate::needspace::weighted_sum;

/// Default relative tolerance for terminal utility against the supremum.
pub const TOL_OPT: f64 = 0.02;

/// Output a need must receive to hold satisfaction at `cap` in steady state,
/// or `None` if no amount suffices.
fn output_to_reach(n: &NeedParams, cap: f64, share: ShareFunction) -> Option<f64> {
    if n.delta == 0.0 || cap == 0.0 {
        return Some(0.0);
    }
    let frac = cap * n.delta / n.effectiveness;
    let eta = share.eta();
    match share {
        ShareFunction::Saturating { .. } => (frac < 1.0).then(|| -(1.0 - frac).ln() / eta),
        ShareFunction::Linear { .. } => (frac <= 1.0).then(|| frac / eta),
    }
}

/// Per-need attainable satisfaction `min(sat_max, desired, Φ^max/δ)`.
///
/// `Φ^max` is the inflow each need receives when the capacity `y_max` is
/// split to maximize steady-state utility `Σ w_i φ_i s(y_i)/δ_i` with each
/// need capped at `min(sat_max, desired)`, at full efficiency. Masked needs
/// and needs with zero weight or effectiveness attain 0.
pub fn attainable_levels(
    needs: &[NeedParams],
    share: ShareFunction,
    y_max: f64,
    sat_max: f64,
) -> Vec<f64> {
    let n = needs.len();
    let eta = share.eta();
    let active: Vec<usize> = (0..n)
        .filter(|&i| needs[i].ethics_mask && needs[i].weight > 0.0 && needs[i].effectiveness > 0.0)
        .collect();
    let cap: Vec<f64> = needs.iter().map(|x| x.desired.min(sat_max)).collect();
    let reach: Vec<Option<f64>> = (0..n)
        .map(|i| output_to_reach(&needs[i], cap[i], share))
        .collect();
    // Marginal steady-state utility per unit output at y = 0.
    let gain: Vec<f64> = needs
        .iter()
        .map(|x| {
            if x.delta == 0.0 {
                f64::INFINITY
            } else {
                x.weight * x.effectiveness * eta / x.delta
            }
        })
        .collect();

    let mut y = vec![0.0; n];
    match share {
        ShareFunction::Saturating { .. } => {
            // y_i(ν) = clamp(ln(g_i/ν)/η, 0, reach_i); total is decreasing in ν.
            let alloc = |nu: f64, y: &mut Vec<f64>| -> f64 {
                let mut s = 0.0;
                for &i in &active {
                    let v = if gain[i].is_infinite() {
                        0.0
                    } else {
                        ((gain[i] / nu).ln() / eta).max(0.0)
                    };
                    y[i] = match reach[i] {
                        Some(r) => v.min(r),
                        None => v,
                    };
                    s += y[i];
                }
                s
            };
            let full: f64 = active
                .iter()
                .map(|&i| reach[i].unwrap_or(f64::INFINITY))
                .sum();
            if full <= y_max {
                for &i in &active {
                    y[i] = reach[i].unwrap_or(0.0);
                }
            } else {
                let finite: Vec<f64> = active
                    .iter()
                    .map(|&i| gain[i])
                    .filter(|g| g.is_finite())
                    .collect();
                let mut hi = finite.iter().copied().fold(0.0, f64::max);
                // At this ν every finite-gain need asks for at least y_max.
                let mut lo = finite.iter().copied().fold(f64::INFINITY, f64::min)
                    * (-eta * y_max).exp()
                    * 0.5;
                for _ in 0..200 {
                    let mid = (lo * hi).sqrt();
                    if alloc(mid, &mut y) > y_max {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                alloc(hi, &mut y);
            }
        }
        ShareFunction::Linear { .. } => {
            let mut order = active.clone();
            order.sort_by(|&a, &b| gain[b].total_cmp(&gain[a]).then(a.cmp(&b)));
            let mut left = y_max;
            for i in order {
                let want = reach[i].unwrap_or(1.0 / eta);
                y[i] = want.min(left);
                left -= y[i];
            }
        }
    }

    (0..n)
        .map(|i| {
            if !active.contains(&i) {
                return 0.0;
            }
            let x = &needs[i];
            if x.delta == 0.0 || matches!(reach[i], Some(r) if y[i] >= r) {
                return cap[i];
            }
            (x.effectiveness * share.value(y[i]) / x.delta).min(cap[i])
        })
        .collect()
}

/// `Σ w_i x_i^attain`.
pub fn attainable_supremum(problem: &PlannerProblem) -> f64 {
    let levels = attainable_levels(
        &problem.needs,
        problem.share,
        problem.solver.y_max,
        problem.sat_max,
    );
    let w: Vec<f64> = problem.needs.iter().map(|n| n.weight).collect();
    weighted_sum(&w, &levels)
}

/// Terminal utility within `tol_opt` (relative) of the attainable supremum.
/// An absolute floor of `1e-6·‖w‖₁·sat_max` covers suprema near zero.
pub fn check_asymptotic_optimality(
    bundle: &TrajectoryBundle,
    problem: &PlannerProblem,
    tol_opt: f64,
) -> Result<CheckCertificate> {
    let w: Vec<f64> = problem.needs.iter().map(|n| n.weight).collect();
    let last = bundle.state.series.len() - 1;
    let terminal = weighted_sum(&w, bundle.state.series.row(last));
    let sup = attainable_supremum(problem);
    let floor = 1e-6 * w.iter().sum::<f64>() * problem.sat_max;
    let mut b = CheckCertificate::builder("asymptotic_optimality", tol_opt)
        .limited(
            "terminal_gap",
            (sup - terminal).abs(),
            tol_opt * sup + floor,
        )
        .info("terminal_utility", terminal)
        .info("attainable_supremum", sup);
    if sup > 0.0 {
        b = b.info("relative_gap", (sup - terminal) / sup);
    }
    if !bundle.converged {
        b = b
            .require("converged", false)
            .note("solver did not converge");
    }
    Ok(b.finish())
}
