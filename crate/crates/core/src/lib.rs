//! Finite-sum stochastic optimization with mini-batch SARAH and random
//! Barzilai-Borwein step sizes.
//!
//! The crate covers sparse data loading, the L2-regularized logistic and
//! ridge objectives, the step-size rules, the solver loops with their
//! baselines, and closed-form convergence checks. Everything numeric is
//! generic over [`Real`]; the aliases below fix the scalar type.
//!
//! ```
//! use mbsarah::{generate_synthetic, LogisticF64, SolverConfigF64, Method, StepRule, SyntheticSpec};
//!
//! let data = generate_synthetic(&SyntheticSpec::classification(200, 5, 1)).unwrap();
//! let obj = LogisticF64::new(data, 1e-2).unwrap();
//! let cfg = SolverConfigF64::new(Method::MbSarahRbb, 50, 4, 5, StepRule::rbb(20)).with_seed(7);
//! let trace = mbsarah::run(&obj, &cfg).unwrap();
//! assert!(trace.final_record().unwrap().grad_norm_sq < trace.initial_grad_norm_sq);
//! ```

pub mod data;
pub mod linalg;
pub mod objective;
pub mod scalar;
pub mod solvers;
pub mod stepsize;
pub mod theory;

pub use data::{
    fetch_dataset, generate_synthetic, normalize_rows, parse_libsvm, write_libsvm, Dataset, DatasetError, Example,
    FetchConfig, FetchError, NamedDataset, ParseError, ParseOptions, SyntheticSpec, TaskKind,
};
pub use linalg::{DenseVector, LinalgError, SparseVector};
pub use objective::{LogisticL2, Metered, Objective, ObjectiveConstants, ObjectiveError, ObjectiveKind, RidgeL2};
pub use scalar::{Field, Real};
pub use solvers::{run, Method, RunTrace, SolverConfig, SolverError, TraceRecord};
pub use stepsize::{SafeguardPolicy, StepError, StepRule};
pub use theory::{TheoryError, TheoryInputs, TheoryReport};

pub type DenseVectorF64 = DenseVector<f64>;
pub type SparseVectorF64 = SparseVector<f64>;
pub type DatasetF64 = Dataset<f64>;
pub type LogisticF64 = LogisticL2<f64>;
pub type RidgeF64 = RidgeL2<f64>;
pub type SolverConfigF64 = SolverConfig<f64>;
pub type RunTraceF64 = RunTrace<f64>;
pub type StepRuleF64 = StepRule<f64>;

pub type DenseVectorF32 = DenseVector<f32>;
pub type SparseVectorF32 = SparseVector<f32>;
pub type DatasetF32 = Dataset<f32>;
pub type LogisticF32 = LogisticL2<f32>;
pub type RidgeF32 = RidgeL2<f32>;
pub type SolverConfigF32 = SolverConfig<f32>;
pub type RunTraceF32 = RunTrace<f32>;
pub type StepRuleF32 = StepRule<f32>;
