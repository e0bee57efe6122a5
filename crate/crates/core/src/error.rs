use std::path::PathBuf;

use thiserror::Error;

use crate::scenario_io::ScenarioIssue;

pub type Result<T, E = EmtError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum EmtError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("integration failure at grid index {index} (t = {time}): {reason}")]
    IntegrationFailure {
        index: usize,
        time: f64,
        reason: String,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("scenario rejected with {} issue(s):\n{}", .0.len(), format_issues(.0))]
    Scenario(Vec<ScenarioIssue>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed table {path}: {reason}")]
    Table { path: PathBuf, reason: String },
}

impl EmtError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        EmtError::Io {
            path: path.into(),
            source,
        }
    }
}

fn format_issues(issues: &[ScenarioIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(EmtError::Dimension { expected, found })
    }
}
