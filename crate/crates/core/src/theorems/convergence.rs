//! Convergence of delivered satisfaction toward the frictionless path, and
//! the utility consequences.

use super::CheckCertificate;
use crate::control::{integrate_forward, ControlPath, PlannerProblem, StatePath};
use crate::error::{EmtError, Result};
use crate::needspace::{holder_pair, l1_norm, sup_norm, WeightVector, TOL_ABS};

/// Allowed relative deviation of a fitted decay rate.
pub const RATE_TOL: f64 = 0.05;

/// Sup-norm distance between two paths and its exponential envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct GapSeries {
    pub times: Vec<f64>,
    pub gap: Vec<f64>,
    pub envelope: Vec<f64>,
    pub k_star: f64,
    pub lambda: f64,
}

/// The frictionless (`a ≡ 1`) and delivered paths under one control.
pub fn ideal_and_delivered(
    problem: &PlannerProblem,
    control: &ControlPath,
) -> Result<(StatePath, StatePath)> {
    let x0: Vec<f64> = problem.needs.iter().map(|n| n.initial).collect();
    let ideal = integrate_forward(&problem.ideal(), &x0, control)?;
    let delivered = integrate_forward(problem, &x0, control)?;
    Ok((ideal, delivered))
}

fn check_grids(a: &StatePath, b: &StatePath) -> Result<()> {
    if !a.series.same_grid(&b.series) || a.series.dim() != b.series.dim() {
        return Err(EmtError::GridMismatch(
            "ideal and delivered paths are on different grids".into(),
        ));
    }
    Ok(())
}

pub fn gap_series(
    ideal: &StatePath,
    delivered: &StatePath,
    k: &[f64],
    lambda: f64,
) -> Result<GapSeries> {
    check_grids(ideal, delivered)?;
    if k.is_empty() || k.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(EmtError::InvalidInput(
            "error constants must be finite and non-negative".into(),
        ));
    }
    let k_star = k.iter().copied().fold(0.0, f64::max);
    let times = ideal.series.times().to_vec();
    let mut gap = Vec::with_capacity(times.len());
    for (a, b) in ideal.series.rows().zip(delivered.series.rows()) {
        let d: Vec<f64> = a.iter().zip(b).map(|(p, q)| p - q).collect();
        gap.push(sup_norm(&d)?);
    }
    let envelope = times.iter().map(|t| k_star * (-lambda * t).exp()).collect();
    Ok(GapSeries {
        times,
        gap,
        envelope,
        k_star,
        lambda,
    })
}

/// Passes iff `‖x(t) - x̂(t)‖∞ <= k*·e^{-λt}` at every grid time.
pub fn check_bounded_error(
    ideal: &StatePath,
    delivered: &StatePath,
    k: &[f64],
    lambda: f64,
) -> Result<CheckCertificate> {
    let g = gap_series(ideal, delivered, k, lambda)?;
    Ok(bounded_error_certificate(&g))
}

pub fn bounded_error_certificate(g: &GapSeries) -> CheckCertificate {
    let (worst_k, excess) = g
        .gap
        .iter()
        .zip(&g.envelope)
        .map(|(x, e)| x - e)
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |acc, (k, v)| if v > acc.1 { (k, v) } else { acc },
        );
    let mut b = CheckCertificate::builder("bounded_error", TOL_ABS)
        .bounded("max_excess", excess)
        .info("worst_t", g.times[worst_k])
        .info("k_star", g.k_star);
    if excess > TOL_ABS {
        let first = g
            .gap
            .iter()
            .zip(&g.envelope)
            .position(|(x, e)| x - e > TOL_ABS)
            .unwrap_or(worst_k);
        b = b.note(format!("envelope first exceeded at t = {}", g.times[first]));
    }
    b.finish()
}

/// Ordinary least squares fit of `ln e(t) = c + s·t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

pub fn fit_log_slope(times: &[f64], values: &[f64]) -> Option<RateFit> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(_, v)| **v > 0.0)
        .map(|(t, v)| (*t, v.ln()))
        .collect();
    let n = pts.len();
    if n < 2 {
        return None;
    }
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxy: f64 = pts.iter().map(|(t, y)| (t - mt) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| (t - mt) * (t - mt)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    Some(RateFit {
        slope,
        intercept: my - slope * mt,
        points: n,
    })
}

/// Fits the decay rate of an error series over the second half of its grid
/// and compares it with `lambda`.
///
/// The fit must give `-λ` within 5% relative. When `λT >= 4` the final error
/// must also be below a tenth of the largest error in the first half. If the
/// series reaches exact zero inside the fitting window, only the nonzero
/// prefix of the window is used.
pub fn check_convergence_rate(
    times: &[f64],
    errors: &[f64],
    lambda: f64,
) -> Result<CheckCertificate> {
    if times.len() != errors.len() || times.len() < 4 {
        return Err(EmtError::InvalidInput(format!(
            "need at least 4 matching points, got {} times and {} errors",
            times.len(),
            errors.len()
        )));
    }
    if let Some(e) = errors.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
        return Err(EmtError::InvalidInput(format!(
            "error series must be finite and non-negative, found {e}"
        )));
    }
    let mid = times.len() / 2;
    let tail_t = &times[mid..];
    let tail_e = &errors[mid..];
    let usable = tail_e
        .iter()
        .position(|e| *e == 0.0)
        .unwrap_or(tail_e.len());
    let mut b = CheckCertificate::builder("convergence_rate", RATE_TOL).info("lambda", lambda);
    if usable < tail_e.len() {
        b = b.note(format!(
            "error reaches zero at t = {}; fitted on the {usable} preceding points",
            tail_t[usable]
        ));
    }
    let fit = fit_log_slope(&tail_t[..usable], &tail_e[..usable]);
    let Some(fit) = fit else {
        return Ok(b
            .require("fit_available", false)
            .note("fewer than two positive errors in the fitting window")
            .finish());
    };
    b = b
        .info("fitted_slope", fit.slope)
        .info("fit_points", fit.points as f64);
    if lambda > 0.0 {
        b = b.bounded("rate_rel_error", (fit.slope + lambda).abs() / lambda);
    } else {
        b = b.require("positive_lambda", false).note(format!(
            "no decay to converge at (lambda = {lambda}); slope {}",
            fit.slope
        ));
    }
    let horizon = times[times.len() - 1] - times[0];
    if lambda * horizon >= 4.0 {
        let head_max = errors[..mid].iter().copied().fold(0.0, f64::max);
        let last = errors[errors.len() - 1];
        b = b.limited("final_over_head_max", last / head_max, 0.1);
    }
    Ok(b.finish())
}

/// Hölder bound at every grid time and a vanishing tail of the utility gap.
pub fn check_utility_convergence(
    w: &WeightVector,
    ideal: &StatePath,
    delivered: &StatePath,
) -> Result<CheckCertificate> {
    check_grids(ideal, delivered)?;
    let norm = l1_norm(w);
    let tol_conv = 1e-3 * norm * ideal.sat_max;
    let mut excess = f64::NEG_INFINITY;
    let mut gaps = Vec::with_capacity(ideal.series.len());
    for (a, b) in ideal.series.rows().zip(delivered.series.rows()) {
        let p = holder_pair(w.as_slice(), a, b)?;
        excess = excess.max(p.gap - p.bound);
        gaps.push(p.gap);
    }
    let tail_start = gaps.len() - (gaps.len() / 10).max(1);
    let tail = gaps[tail_start..].iter().copied().fold(0.0, f64::max);
    Ok(CheckCertificate::builder("utility_convergence", TOL_ABS)
        .bounded("holder_excess", excess)
        .limited("tail_gap", tail, tol_conv)
        .info("max_gap", gaps.iter().copied().fold(0.0, f64::max))
        .finish())
}
