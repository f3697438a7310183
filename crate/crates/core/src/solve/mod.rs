//! Backend-agnostic MILP solving.
//!
//! Backends are selected by identifier: `highs` (branch-and-bound through the
//! HiGHS library) and `oracle` (the exhaustive reference solver, only for tiny
//! instances). The `CEH_SIZING_BACKEND` environment variable overrides the
//! default identifier.

mod highs;
mod oracle;
pub mod simplex;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{MilpProblem, StructureError};

pub use self::highs::HighsBackend;
pub use oracle::{combination_count, oracle_solve, OracleBackend, OracleCaps};

pub const BACKEND_ENV: &str = "CEH_SIZING_BACKEND";
pub const BACKENDS: [&str; 2] = ["highs", "oracle"];

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("unknown backend '{0}' (available: highs, oracle)")]
    BackendUnavailable(String),
    #[error("numerical failure in backend '{backend}': {message}")]
    NumericalFailure { backend: String, message: String },
    #[error("enumeration too large: {combinations} integer combinations exceed the cap of {cap}")]
    EnumerationTooLarge { combinations: u128, cap: u128 },
    #[error("malformed problem: {0}")]
    Structure(#[from] StructureError),
    #[error("invalid solve options: {0}")]
    Options(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub relative_gap: f64,
    pub time_limit_s: f64,
    pub threads: Option<u32>,
    pub seed: u64,
    pub backend_id: String,
    pub oracle_caps: OracleCaps,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            relative_gap: 1e-6,
            time_limit_s: 600.0,
            threads: None,
            seed: 0,
            backend_id: default_backend_id(),
            oracle_caps: OracleCaps::default(),
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.relative_gap >= 0.0 && self.relative_gap.is_finite()) {
            return Err(SolveError::Options(format!("gap must be >= 0, got {}", self.relative_gap)));
        }
        if !(self.time_limit_s > 0.0) {
            return Err(SolveError::Options(format!("time limit must be > 0, got {}", self.time_limit_s)));
        }
        Ok(())
    }
}

pub fn default_backend_id() -> String {
    std::env::var(BACKEND_ENV).ok().filter(|s| !s.is_empty()).unwrap_or_else(|| "highs".into())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// Incumbent found, optimality not proven within the requested gap.
    Feasible { gap: f64 },
    Infeasible,
    Unbounded,
    /// Limit reached without any incumbent.
    TimeLimit,
}

impl SolveStatus {
    pub fn has_solution(&self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Feasible { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible { .. } => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::TimeLimit => "time_limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    /// Column values, present when a solution exists.
    pub values: Option<Vec<f64>>,
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    pub wall_time_s: f64,
    pub backend: String,
    pub diagnostics: Vec<(String, String)>,
}

impl SolveOutcome {
    pub(crate) fn without_solution(status: SolveStatus, backend: &str, started: Instant) -> Self {
        SolveOutcome {
            status,
            values: None,
            objective: None,
            bound: None,
            wall_time_s: started.elapsed().as_secs_f64(),
            backend: backend.into(),
            diagnostics: Vec::new(),
        }
    }
}

pub trait MilpBackend: Send + Sync {
    fn id(&self) -> &'static str;
    fn solve(&self, problem: &MilpProblem, options: &SolveOptions) -> Result<SolveOutcome, SolveError>;
}

pub fn backend(id: &str) -> Result<Box<dyn MilpBackend>, SolveError> {
    match id {
        "highs" => Ok(Box::new(HighsBackend)),
        "oracle" => Ok(Box::new(OracleBackend)),
        other => Err(SolveError::BackendUnavailable(other.into())),
    }
}

/// Solves with the backend named in `options`. Integer columns of the
/// returned values are rounded.
pub fn solve(problem: &MilpProblem, options: &SolveOptions) -> Result<SolveOutcome, SolveError> {
    options.validate()?;
    problem.check_structure()?;
    let b = backend(&options.backend_id)?;
    let mut outcome = b.solve(problem, options)?;
    if let Some(values) = &mut outcome.values {
        round_integers(problem, values);
    }
    log::info!(
        "{} finished: {} objective {:?} in {:.3} s",
        outcome.backend,
        outcome.status.label(),
        outcome.objective,
        outcome.wall_time_s
    );
    Ok(outcome)
}

pub(crate) fn round_integers(problem: &MilpProblem, values: &mut [f64]) {
    for (c, v) in problem.columns.iter().zip(values.iter_mut()) {
        if c.integrality != crate::model::Integrality::Continuous {
            *v = v.round();
        }
    }
}

/// `|a - b| / max(1, |b|)`
pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
