//! The planner's Pontryagin system on a truncated horizon: state and co-state
//! dynamics, the Hamiltonian and its maximization, fixed-step RK4
//! integrators, and the forward–backward sweep.

mod dynamics;
mod integrate;
mod maximize;
mod sweep;

pub use dynamics::{
    costate_rhs, dh_dcontrol, hamiltonian, state_rhs, stationarity_residual, ControlGradient,
    CostateValue,
};
pub use integrate::{integrate_backward, integrate_forward, uniform_grid};
pub use maximize::maximize_hamiltonian;
pub use sweep::{discounted_utility, fbsm_solve, lq_steady_state, SteadyState};

use crate::economy::{Efficiency, NeedParams, ShareFunction};
use crate::error::{EmtError, Result};
use crate::needspace::{ExperientialState, WeightVector};

/// Which co-state convention the backward pass integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostateMode {
    /// Discounted shadow price λ: `dλ/dt = -e^{-ρt} ∂U/∂x + δλ`.
    PresentValue,
    /// Undiscounted shadow price μ = e^{ρt} λ: `dμ/dt = (ρ+δ)μ - ∂U/∂x`.
    CurrentValue,
    /// `dλ/dt = ρλ - e^{-ρt} ∂U/∂x + δλ`, which mixes both conventions.
    PaperLiteral,
}

impl CostateMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CostateMode::PresentValue => "present_value",
            CostateMode::CurrentValue => "current_value",
            CostateMode::PaperLiteral => "paper_literal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "present_value" => Some(CostateMode::PresentValue),
            "current_value" => Some(CostateMode::CurrentValue),
            "paper_literal" => Some(CostateMode::PaperLiteral),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlMode {
    /// One scalar effort `Y ∈ [0, y_max]`, split across needs by weight.
    ScalarBounded,
    /// Per-need output `y_i ≥ 0` with `Σ y_i ≤ y_max`.
    AllocationSimplex,
}

impl ControlMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControlMode::ScalarBounded => "scalar_bounded",
            ControlMode::AllocationSimplex => "allocation_simplex",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "scalar_bounded" => Some(ControlMode::ScalarBounded),
            "allocation_simplex" => Some(ControlMode::AllocationSimplex),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub rho: f64,
    pub horizon: f64,
    /// Number of grid intervals; the grid has `steps + 1` points.
    pub steps: usize,
    pub relaxation: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub costate_mode: CostateMode,
    pub control_mode: ControlMode,
    pub y_max: f64,
}

impl SolverConfig {
    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut issues = Vec::new();
        if !(self.rho.is_finite() && self.rho > 0.0) {
            issues.push(format!("rho must be positive, got {}", self.rho));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            issues.push(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.steps < 2 {
            issues.push(format!("steps must be at least 2, got {}", self.steps));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            issues.push(format!("relaxation outside (0,1], got {}", self.relaxation));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            issues.push(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_iter == 0 {
            issues.push("max_iter must be positive".to_string());
        }
        if !(self.y_max.is_finite() && self.y_max > 0.0) {
            issues.push(format!("y_max must be positive, got {}", self.y_max));
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(issues)
        }
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.steps as f64
    }
}

/// Everything the solver needs about one economy.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerProblem {
    pub needs: Vec<NeedParams>,
    pub meaning_index: Option<usize>,
    pub efficiency: Efficiency,
    pub share: ShareFunction,
    pub sat_max: f64,
    pub solver: SolverConfig,
}

impl PlannerProblem {
    pub fn dim(&self) -> usize {
        self.needs.len()
    }

    pub fn weights(&self) -> Result<WeightVector> {
        let w = self.needs.iter().map(|n| n.weight).collect();
        match self.meaning_index {
            Some(m) => WeightVector::with_meaning(w, m),
            None => WeightVector::new(w),
        }
    }

    pub fn initial_state(&self) -> Result<ExperientialState> {
        ExperientialState::new(
            0.0,
            self.needs.iter().map(|n| n.initial).collect(),
            self.sat_max,
        )
    }

    /// Same economy with a frictionless mapping, `a(t) = 1`.
    pub fn ideal(&self) -> Self {
        Self {
            efficiency: Efficiency::Perfect,
            ..self.clone()
        }
    }

    pub fn with_costate_mode(&self, mode: CostateMode) -> Self {
        let mut out = self.clone();
        out.solver.costate_mode = mode;
        out
    }

    pub fn with_scaled_weights(&self, c: f64) -> Self {
        let mut out = self.clone();
        for n in &mut out.needs {
            n.weight *= c;
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.needs.is_empty() {
            return Err(EmtError::InvalidInput("problem has no needs".into()));
        }
        for (i, n) in self.needs.iter().enumerate() {
            n.validate(self.sat_max).map_err(|e| {
                EmtError::InvalidParameter(format!("need {}: {}", i + 1, e.join("; ")))
            })?;
        }
        self.solver
            .validate()
            .map_err(|e| EmtError::InvalidParameter(e.join("; ")))?;
        if let Efficiency::Ideation(ip) = &self.efficiency {
            ip.validate()?;
        }
        if !(self.share.eta().is_finite() && self.share.eta() > 0.0) {
            return Err(EmtError::InvalidParameter(format!(
                "eta must be positive, got {}",
                self.share.eta()
            )));
        }
        self.weights()?;
        Ok(())
    }
}

/// Row-major values on a time grid: `dim` numbers per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    times: Vec<f64>,
    dim: usize,
    data: Vec<f64>,
}

impl Series {
    pub fn zeros(times: Vec<f64>, dim: usize) -> Self {
        let data = vec![0.0; times.len() * dim];
        Self { times, dim, data }
    }

    pub fn from_rows(times: Vec<f64>, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() != times.len() || rows.is_empty() {
            return Err(EmtError::GridMismatch(format!(
                "{} rows for {} grid points",
                rows.len(),
                times.len()
            )));
        }
        let dim = rows[0].len();
        let mut data = Vec::with_capacity(dim * rows.len());
        for r in rows {
            crate::error::check_dim(dim, r.len())?;
            data.extend_from_slice(r);
        }
        Ok(Self { times, dim, data })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn row_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1))
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.rows().map(|r| r[i]).collect()
    }

    pub fn same_grid(&self, other: &Series) -> bool {
        self.times == other.times
    }
}

/// Satisfaction trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePath {
    pub series: Series,
    pub sat_max: f64,
    /// Number of component updates that left `[0, sat_max]` and were clamped.
    pub clamp_events: usize,
}

impl StatePath {
    pub fn state_at(&self, k: usize) -> Result<ExperientialState> {
        ExperientialState::new(
            self.series.times()[k],
            self.series.row(k).to_vec(),
            self.sat_max,
        )
    }
}

/// Shadow prices, tagged with the convention they were computed in.
#[derive(Debug, Clone, PartialEq)]
pub struct CostatePath {
    pub series: Series,
    pub mode: CostateMode,
}

impl CostatePath {
    pub fn value_at(&self, k: usize) -> CostateValue {
        CostateValue {
            mode: self.mode,
            values: self.series.row(k).to_vec(),
        }
    }

    /// Converts between present and current value via `μ = e^{ρt} λ`.
    pub fn converted(&self, target: CostateMode, rho: f64) -> Result<CostatePath> {
        if self.mode == target {
            return Ok(self.clone());
        }
        let factor_sign = match (self.mode, target) {
            (CostateMode::CurrentValue, CostateMode::PresentValue) => -1.0,
            (CostateMode::PresentValue, CostateMode::CurrentValue) => 1.0,
            _ => {
                return Err(EmtError::ContractViolation(format!(
                    "no transform between {} and {} co-states",
                    self.mode.as_str(),
                    target.as_str()
                )))
            }
        };
        let mut series = self.series.clone();
        for k in 0..series.len() {
            let f = (factor_sign * rho * series.times()[k]).exp();
            series.row_mut(k).iter_mut().for_each(|v| *v *= f);
        }
        Ok(CostatePath {
            series,
            mode: target,
        })
    }
}

/// Control trajectory; one column in scalar mode, `N` in allocation mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPath {
    pub series: Series,
    pub mode: ControlMode,
}

impl ControlPath {
    pub fn zeros(times: Vec<f64>, mode: ControlMode, n: usize) -> Self {
        let dim = match mode {
            ControlMode::ScalarBounded => 1,
            ControlMode::AllocationSimplex => n,
        };
        Self {
            series: Series::zeros(times, dim),
            mode,
        }
    }

    pub fn value_at(&self, k: usize) -> crate::economy::ControlValue {
        let row = self.series.row(k);
        match self.mode {
            ControlMode::ScalarBounded => crate::economy::ControlValue::Scalar(row[0]),
            ControlMode::AllocationSimplex => {
                crate::economy::ControlValue::Allocation(row.to_vec())
            }
        }
    }
}

/// Result of a forward–backward sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBundle {
    pub state: StatePath,
    pub costate: CostatePath,
    pub control: ControlPath,
    /// `∫₀ᵀ e^{-ρt} U(x(t)) dt` by the trapezoid rule.
    pub utility_integral: f64,
    /// Running value of the same integral at each grid point.
    pub running_utility: Vec<f64>,
    /// Per-time stationarity residual of the Hamiltonian maximization.
    pub hamiltonian_residual: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Sup-norm control change of the last sweep.
    pub final_change: f64,
    /// Utility integral of the state path evaluated in each sweep.
    pub utility_history: Vec<f64>,
}

impl TrajectoryBundle {
    pub fn times(&self) -> &[f64] {
        self.state.series.times()
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use crate::economy::IdeationParams;

    /// A small well-posed problem with varied need parameters.
    pub fn problem(n: usize, mode: ControlMode) -> PlannerProblem {
        let needs = (0..n)
            .map(|i| NeedParams {
                label: format!("need{}", i + 1),
                weight: 1.0 + 0.25 * i as f64,
                delta: 1.5 + 0.1 * i as f64,
                desired: 1.0,
                effectiveness: 0.8 + 0.05 * i as f64,
                error_bound: 1.0,
                ethics_mask: true,
                initial: 0.1,
            })
            .collect();
        PlannerProblem {
            needs,
            meaning_index: None,
            efficiency: Efficiency::Ideation(IdeationParams {
                c0: 1.0,
                lambda_decay: 0.5,
            }),
            share: ShareFunction::Saturating { eta: 1.0 },
            sat_max: 1.0,
            solver: SolverConfig {
                rho: 0.25,
                horizon: 10.0,
                steps: 200,
                relaxation: 0.5,
                tol: 1e-6,
                max_iter: 500,
                costate_mode: CostateMode::CurrentValue,
                control_mode: mode,
                y_max: 2.0,
            },
        }
    }
}
