use super::CheckCertificate;
use crate::error::{check_dim, EmtError, Result};
use crate::needspace::{utility, weighted_sum, ExperientialState, WeightVector, TOL_ABS};

/// Utility before and after dropping the `rollback` dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rollback {
    pub before: f64,
    pub after: f64,
    pub removed: f64,
}

pub fn rollback_utility(
    w: &WeightVector,
    x: &ExperientialState,
    rollback: &[usize],
) -> Result<Rollback> {
    check_dim(w.len(), x.dim())?;
    let mut drop = vec![false; x.dim()];
    for &i in rollback {
        if i >= x.dim() {
            return Err(EmtError::InvalidInput(format!(
                "rollback index {i} outside {} dimensions",
                x.dim()
            )));
        }
        if drop[i] {
            return Err(EmtError::InvalidInput(format!(
                "rollback index {i} repeated"
            )));
        }
        drop[i] = true;
    }
    let (kw, kx): (Vec<f64>, Vec<f64>) = w
        .as_slice()
        .iter()
        .zip(x.sat())
        .zip(&drop)
        .filter(|(_, d)| !**d)
        .map(|((a, b), _)| (*a, *b))
        .unzip();
    let removed = rollback.iter().map(|&i| w.as_slice()[i] * x.sat()[i]).sum();
    Ok(Rollback {
        before: utility(w, x)?,
        after: weighted_sum(&kw, &kx),
        removed,
    })
}

/// Dropping dimensions lowers utility by exactly their contribution, and
/// strictly when each dropped dimension contributes.
pub fn check_irreversibility(
    w: &WeightVector,
    x: &ExperientialState,
    rollback: &[usize],
) -> Result<CheckCertificate> {
    let r = rollback_utility(w, x, rollback)?;
    let mut b = CheckCertificate::builder("irreversibility", TOL_ABS)
        .info("utility_before", r.before)
        .info("utility_after", r.after);
    if rollback.is_empty() {
        return Ok(b
            .bounded("accounting_error", (r.after - r.before).abs())
            .note("empty rollback; utility unchanged")
            .finish());
    }
    let inert: Vec<usize> = rollback
        .iter()
        .copied()
        .filter(|&i| !(w.as_slice()[i] * x.sat()[i] > 0.0))
        .collect();
    b = b
        .bounded("accounting_error", (r.after - (r.before - r.removed)).abs())
        .require("strict_decrease", r.after < r.before)
        .require("premise_contributing_dims", inert.is_empty());
    if !inert.is_empty() {
        b = b.note(format!(
            "rolled-back dimensions without contribution: {inert:?}"
        ));
    }
    Ok(b.finish())
}

/// Utility supremum with all dimensions free and with dimension `m` held at
/// zero, every other dimension at `sat_max`.
pub fn meaning_suprema(w: &[f64], m: usize, sat_max: f64) -> Result<(f64, f64)> {
    if m >= w.len() {
        return Err(EmtError::InvalidInput(format!(
            "meaning index {m} outside {} dimensions",
            w.len()
        )));
    }
    let full = vec![sat_max; w.len()];
    let mut suppressed = full.clone();
    suppressed[m] = 0.0;
    Ok((weighted_sum(w, &full), weighted_sum(w, &suppressed)))
}

/// Suppressing the meaning dimension costs exactly `w_m·sat_max`, which is
/// strictly positive when `w_m > 0`.
pub fn check_meaning_irreducibility(w: &[f64], m: usize, sat_max: f64) -> Result<CheckCertificate> {
    let (full, suppressed) = meaning_suprema(w, m, sat_max)?;
    let shortfall = full - suppressed;
    let mut b = CheckCertificate::builder("meaning_irreducibility", TOL_ABS)
        .info("full_supremum", full)
        .info("suppressed_supremum", suppressed)
        .info("shortfall", shortfall)
        .bounded("accounting_error", (shortfall - w[m] * sat_max).abs())
        .require("strict_shortfall", suppressed < full);
    if !(w[m] > 0.0) {
        b = b.require("premise_positive_weight", false).note(format!(
            "meaning weight w[{m}] = {} violates the positive-weight premise",
            w[m]
        ));
    }
    Ok(b.finish())
}
