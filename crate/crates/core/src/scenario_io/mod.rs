//! Scenario files, seeded randomness, and result serialization.
//!
//! A scenario is a line-oriented text file of `[section]` headers followed by
//! `key = value` lines; `#` starts a comment. See [`parse_scenario`].

mod parse;
mod results;
mod rng;

use std::fmt;

pub use parse::{emit_scenario, parse_scenario, parse_scenario_with};
pub use results::{
    certificate_report, gap_table, read_table, scenario_hash, trajectory_table, write_results,
    write_table, ResultTable, RunRecord,
};
pub use rng::{seeded_rng, SplitMix64};

use crate::control::{PlannerProblem, SolverConfig};
use crate::economy::{
    Efficiency, FactorAllocation, IdeationParams, NeedParams, ProductionParams, ShareFunction,
};
use crate::theorems::DimensionAdd;

/// One problem found while reading a scenario. `line` is 0 for problems
/// that come from command-line overrides or from the document as a whole.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioIssue {
    pub line: usize,
    pub message: String,
}

impl ScenarioIssue {
    pub(crate) fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for ScenarioIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: {}", self.line, self.message)
        } else {
            f.write_str(&self.message)
        }
    }
}

/// Human-labor discovery settings and the schedule of dimension additions.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierConfig {
    /// σ in the discovery rate `σ·L_h`.
    pub discovery_slope: f64,
    pub new_weight: f64,
    pub new_attainable: f64,
    pub human_labor: f64,
    pub adds: Vec<DimensionAdd>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub sat_max: f64,
    pub production: ProductionParams,
    pub ideation: IdeationParams,
    /// `solver.y_max` is always resolved; this records whether the file set
    /// it or it was derived from production.
    pub solver: SolverConfig,
    pub explicit_y_max: bool,
    pub share: ShareFunction,
    pub factors: FactorAllocation,
    pub needs: Vec<NeedParams>,
    pub meaning_index: Option<usize>,
    pub frontier: Option<FrontierConfig>,
}

impl ScenarioConfig {
    pub fn dim(&self) -> usize {
        self.needs.len()
    }

    pub fn problem(&self) -> PlannerProblem {
        PlannerProblem {
            needs: self.needs.clone(),
            meaning_index: self.meaning_index,
            efficiency: Efficiency::Ideation(self.ideation),
            share: self.share,
            sat_max: self.sat_max,
            solver: self.solver,
        }
    }

    /// Weight mass outside the modeled dimensions. Every weight lives in the
    /// file, so the tail is empty.
    pub fn truncation_tail(&self) -> f64 {
        0.0
    }
}
