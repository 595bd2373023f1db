//! Optimization loops and their building blocks.
//!
//! All variance-reduced methods share one two-level loop. Each outer loop
//! takes one full-gradient pass at the snapshot `w̃`, steps
//! `w_1 = w_0 - η_0 ∇P(w_0)`, then runs `m - 1` stochastic inner iterations,
//! and ends with `w̃ ← w_m`. The methods differ in the estimator (recursive
//! or snapshot-based) and in the step rule.

mod config;
mod estimators;
mod run;
mod sampling;
mod trace;

pub use config::{Method, SolverConfig};
pub use estimators::{sarah_estimator_update, svrg_estimator};
pub use run::{run, run_mb_sarah_rbb, run_ms2gd_rbb, run_sgd, run_svrg, run_svrg_bb};
pub use sampling::sample_without_replacement;
pub use trace::{record_fields, InnerRecord, RunTrace, StepSummary, TraceRecord, TRACE_CSV_HEADER};

use thiserror::Error;

use crate::objective::ObjectiveError;
use crate::scalar::Real;
use crate::stepsize::StepError;

#[derive(Debug, Error)]
pub enum SolverError<T: Real> {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Step(#[from] StepError),
    /// A non-finite objective value or iterate; carries the trace up to and
    /// including the offending outer loop.
    #[error("diverged at outer loop {outer_index}: objective value {value}")]
    Diverged {
        outer_index: usize,
        value: T,
        trace: Box<RunTrace<T>>,
    },
}
