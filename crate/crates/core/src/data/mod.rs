//! Labeled sparse datasets: LIBSVM I/O, synthetic generation, row
//! normalization, and cached downloads of the benchmark sets.

mod fetch;
mod libsvm;
mod synthetic;

pub use fetch::{
    cache_path, fetch_dataset, DatasetSource, Downloader, FetchConfig, FetchError, FetchOutcome, HttpDownloader,
    NamedDataset,
};
pub use libsvm::{parse_libsvm, write_libsvm, ParseError, ParseErrorKind, ParseOptions};
pub use synthetic::{generate_synthetic, SyntheticSpec};

use thiserror::Error;

use crate::linalg::SparseVector;
use crate::scalar::Real;

/// Whether labels are class signs or real-valued targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TaskKind {
    #[default]
    Classification,
    Regression,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example<T> {
    pub features: SparseVector<T>,
    pub label: T,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatasetError {
    #[error("dataset has no examples")]
    Empty,
    #[error("example {index} has dimension {found}, dataset dimension is {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("example {index} has label {label}; classification labels must be +1 or -1")]
    BadLabel { index: usize, label: String },
}

/// `n` labeled examples in dimension `d`. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    name: String,
    dim: usize,
    examples: Vec<Example<T>>,
}

impl<T: Real> Dataset<T> {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        examples: Vec<Example<T>>,
    ) -> Result<Self, DatasetError> {
        if examples.is_empty() {
            return Err(DatasetError::Empty);
        }
        for (index, ex) in examples.iter().enumerate() {
            if ex.features.dim() != dim {
                return Err(DatasetError::DimensionMismatch {
                    index,
                    expected: dim,
                    found: ex.features.dim(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            dim,
            examples,
        })
    }

    /// Like [`Dataset::new`] but additionally requires every label to be ±1.
    pub fn new_classification(
        name: impl Into<String>,
        dim: usize,
        examples: Vec<Example<T>>,
    ) -> Result<Self, DatasetError> {
        for (index, ex) in examples.iter().enumerate() {
            if ex.label != T::one() && ex.label != -T::one() {
                return Err(DatasetError::BadLabel {
                    index,
                    label: ex.label.to_string(),
                });
            }
        }
        Self::new(name, dim, examples)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn examples(&self) -> &[Example<T>] {
        &self.examples
    }

    pub fn example(&self, i: usize) -> &Example<T> {
        &self.examples[i]
    }

    pub fn max_row_norm_sq(&self) -> T {
        self.examples
            .iter()
            .map(|e| e.features.norm_sq())
            .fold(T::zero(), T::max)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn cast<U: Real>(&self) -> Dataset<U> {
        Dataset {
            name: self.name.clone(),
            dim: self.dim,
            examples: self
                .examples
                .iter()
                .map(|e| Example {
                    features: e.features.cast(),
                    label: U::from_f64(e.label.to_f64().unwrap_or(f64::NAN)).unwrap_or(U::nan()),
                })
                .collect(),
        }
    }
}

/// Rows that [`normalize_rows`] could not scale.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NormalizationReport {
    pub zero_rows: Vec<usize>,
}

/// Scales every feature row to unit Euclidean norm. All-zero rows are left
/// as they are and listed in the report.
pub fn normalize_rows<T: Real>(ds: &Dataset<T>) -> (Dataset<T>, NormalizationReport) {
    let mut report = NormalizationReport::default();
    let examples = ds
        .examples
        .iter()
        .enumerate()
        .map(|(i, ex)| {
            let norm = ex.features.norm_sq().sqrt();
            let features = if norm == T::zero() {
                report.zero_rows.push(i);
                ex.features.clone()
            } else if norm == T::one() {
                ex.features.clone()
            } else {
                ex.features.divided(norm)
            };
            Example {
                features,
                label: ex.label,
            }
        })
        .collect();
    let out = Dataset {
        name: format!("{}+normalized", ds.name),
        dim: ds.dim,
        examples,
    };
    (out, report)
}
