//! Truncated experiential state, importance weights, and the linear utility
//! functional over them.
//!
//! The need index set is truncated to `N` dimensions. Everything here is a
//! pure function of its inputs.

use crate::error::{check_dim, EmtError, Result};

/// Default upper bound on a satisfaction level.
pub const DEFAULT_SAT_MAX: f64 = 1.0;
/// Absolute tolerance used for floating-point comparisons.
pub const TOL_ABS: f64 = 1e-12;
/// Relative tolerance used for floating-point comparisons.
pub const TOL_REL: f64 = 1e-9;

/// `a <= b` up to the crate-wide absolute + relative tolerance.
pub fn approx_le(a: f64, b: f64) -> bool {
    a <= b + TOL_ABS + TOL_REL * b.abs()
}

/// Satisfaction levels of the truncated need vector at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperientialState {
    time: f64,
    sat: Vec<f64>,
    sat_max: f64,
}

impl ExperientialState {
    pub fn new(time: f64, sat: Vec<f64>, sat_max: f64) -> Result<Self> {
        if !(time.is_finite() && time >= 0.0) {
            return Err(EmtError::InvalidInput(format!(
                "state time must be finite and non-negative, got {time}"
            )));
        }
        if !(sat_max.is_finite() && sat_max > 0.0) {
            return Err(EmtError::InvalidInput(format!(
                "sat_max must be positive, got {sat_max}"
            )));
        }
        if sat.is_empty() {
            return Err(EmtError::InvalidInput(
                "experiential state needs at least one dimension".into(),
            ));
        }
        if let Some((i, v)) = sat
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0 && **v <= sat_max))
        {
            return Err(EmtError::InvalidInput(format!(
                "satisfaction {i} = {v} outside [0, {sat_max}]"
            )));
        }
        Ok(Self { time, sat, sat_max })
    }

    pub fn zeros(n: usize, sat_max: f64) -> Result<Self> {
        Self::new(0.0, vec![0.0; n], sat_max)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn sat(&self) -> &[f64] {
        &self.sat
    }

    pub fn sat_max(&self) -> f64 {
        self.sat_max
    }

    pub fn dim(&self) -> usize {
        self.sat.len()
    }

    pub fn at_time(&self, time: f64) -> Result<Self> {
        Self::new(time, self.sat.clone(), self.sat_max)
    }
}

/// Non-negative importance weights, optionally tagging one dimension as the
/// meaning dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    w: Vec<f64>,
    meaning_index: Option<usize>,
}

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(EmtError::InvalidInput("weight vector is empty".into()));
        }
        if let Some((i, v)) = w
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(EmtError::InvalidInput(format!(
                "weight {i} = {v} must be finite and non-negative"
            )));
        }
        Ok(Self {
            w,
            meaning_index: None,
        })
    }

    /// Tags dimension `m` as meaning. Requires `w[m] > 0`.
    pub fn with_meaning(w: Vec<f64>, m: usize) -> Result<Self> {
        let mut out = Self::new(w)?;
        match out.w.get(m) {
            None => {
                return Err(EmtError::InvalidInput(format!(
                    "meaning index {m} out of range for {} weights",
                    out.w.len()
                )))
            }
            Some(&wm) if wm <= 0.0 => {
                return Err(EmtError::InvalidInput(format!(
                    "meaning weight w[{m}] must be positive"
                )))
            }
            Some(_) => {}
        }
        out.meaning_index = Some(m);
        Ok(out)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn meaning_index(&self) -> Option<usize> {
        self.meaning_index
    }

    /// Multiplies every weight by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(EmtError::InvalidInput(format!(
                "weight scale must be positive, got {c}"
            )));
        }
        Ok(Self {
            w: self.w.iter().map(|v| v * c).collect(),
            meaning_index: self.meaning_index,
        })
    }
}

pub fn sup_norm(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(EmtError::InvalidInput("sup_norm of an empty vector".into()));
    }
    let mut m = 0.0_f64;
    for (i, x) in v.iter().enumerate() {
        if !x.is_finite() {
            return Err(EmtError::InvalidInput(format!(
                "non-finite entry {i} in sup_norm"
            )));
        }
        m = m.max(x.abs());
    }
    Ok(m)
}

pub fn l1_norm(w: &WeightVector) -> f64 {
    w.w.iter().sum()
}

/// `Σ w_i x_i` on raw slices; callers check dimensions.
pub(crate) fn weighted_sum(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

pub fn utility(w: &WeightVector, x: &ExperientialState) -> Result<f64> {
    check_dim(w.len(), x.dim())?;
    Ok(weighted_sum(&w.w, &x.sat))
}

/// Both sides of the Hölder bound `|U(x) - U(x̂)| <= ‖w‖₁ ‖x - x̂‖∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapBound {
    pub gap: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn utility_gap_bound(
    w: &WeightVector,
    x: &ExperientialState,
    xhat: &ExperientialState,
) -> Result<GapBound> {
    check_dim(x.dim(), xhat.dim())?;
    if x.time != xhat.time {
        return Err(EmtError::InvalidInput(format!(
            "states compared at different times ({} vs {})",
            x.time, xhat.time
        )));
    }
    holder_pair(w.as_slice(), &x.sat, &xhat.sat)
}

pub(crate) fn holder_pair(w: &[f64], x: &[f64], xhat: &[f64]) -> Result<GapBound> {
    check_dim(w.len(), x.len())?;
    check_dim(x.len(), xhat.len())?;
    let gap = (weighted_sum(w, x) - weighted_sum(w, xhat)).abs();
    let diff: Vec<f64> = x.iter().zip(xhat).map(|(a, b)| a - b).collect();
    let bound = w.iter().sum::<f64>() * sup_norm(&diff)?;
    Ok(GapBound {
        gap,
        bound,
        holds: gap <= bound + TOL_ABS,
    })
}

/// Appends new need dimensions `(weight, initial satisfaction)`.
pub fn extend_dimensions(
    x: &ExperientialState,
    w: &WeightVector,
    new_needs: &[(f64, f64)],
) -> Result<(ExperientialState, WeightVector)> {
    check_dim(w.len(), x.dim())?;
    for &(wi, si) in new_needs {
        if !(wi.is_finite() && wi >= 0.0) {
            return Err(EmtError::InvalidInput(format!(
                "appended weight {wi} must be non-negative"
            )));
        }
        if !(si.is_finite() && (0.0..=x.sat_max).contains(&si)) {
            return Err(EmtError::InvalidInput(format!(
                "appended satisfaction {si} outside [0, {}]",
                x.sat_max
            )));
        }
    }
    let mut sat = x.sat.clone();
    let mut weights = w.w.clone();
    for &(wi, si) in new_needs {
        weights.push(wi);
        sat.push(si);
    }
    Ok((
        ExperientialState {
            time: x.time,
            sat,
            sat_max: x.sat_max,
        },
        WeightVector {
            w: weights,
            meaning_index: w.meaning_index,
        },
    ))
}

/// Drops trailing dimensions so that `n` remain; the inverse of
/// [`extend_dimensions`].
pub fn truncate_dimensions(
    x: &ExperientialState,
    w: &WeightVector,
    n: usize,
) -> Result<(ExperientialState, WeightVector)> {
    check_dim(w.len(), x.dim())?;
    if n == 0 || n > x.dim() {
        return Err(EmtError::InvalidInput(format!(
            "cannot truncate {} dimensions to {n}",
            x.dim()
        )));
    }
    let meaning_index = w.meaning_index.filter(|&m| m < n);
    Ok((
        ExperientialState {
            time: x.time,
            sat: x.sat[..n].to_vec(),
            sat_max: x.sat_max,
        },
        WeightVector {
            w: w.w[..n].to_vec(),
            meaning_index,
        },
    ))
}
