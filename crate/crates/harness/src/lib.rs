//! Experiment harness for `mbsarah`: spec files, reference minimizers,
//! experiment and sweep runners, and the `mbsarah` command line.

pub mod cli;
pub mod experiment;
pub mod reference;
pub mod spec;
pub mod sweep;

use std::path::PathBuf;

use thiserror::Error;

pub use experiment::{run_experiment, ExperimentOutcome, RunOutcome, RunStatus};
pub use reference::{cached_reference, compute_reference, Reference, ReferenceError};
pub use spec::{ExperimentSpec, ReferencePolicy, RunSpec, SweepSpec};
pub use sweep::{passes_to_target, run_sweep, SweepOutcome};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Spec { path: PathBuf, message: String },
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Fetch(#[from] mbsarah::FetchError),
    #[error(transparent)]
    Objective(#[from] mbsarah::ObjectiveError),
    #[error(transparent)]
    Reference(#[from] ReferenceError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
