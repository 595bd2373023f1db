use std::io::Write;

use crate::linalg::DenseVector;
use crate::scalar::Real;

pub const TRACE_CSV_HEADER: [&str; 9] = [
    "outer",
    "passes",
    "passes_incl_stepsize",
    "value",
    "grad_norm_sq",
    "step_min",
    "step_mean",
    "step_max",
    "fallbacks",
];

/// Min / mean / max of the steps taken during one outer loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSummary<T> {
    pub min: T,
    pub mean: T,
    pub max: T,
}

impl<T: Real> StepSummary<T> {
    pub fn of(steps: &[T]) -> Self {
        if steps.is_empty() {
            return Self {
                min: T::nan(),
                mean: T::nan(),
                max: T::nan(),
            };
        }
        let min = steps.iter().copied().fold(T::infinity(), T::min);
        let max = steps.iter().copied().fold(T::neg_infinity(), T::max);
        let mean = steps.iter().copied().sum::<T>() / T::from_count(steps.len());
        Self { min, mean, max }
    }
}

/// State after one outer loop.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord<T> {
    /// 1-based outer loop index.
    pub outer_index: usize,
    /// Component-gradient evaluations so far divided by `n`.
    pub effective_passes: f64,
    /// Same, also counting the step-size sub-sample evaluations.
    pub passes_incl_stepsize: f64,
    pub objective_value: T,
    pub grad_norm_sq: T,
    pub steps: StepSummary<T>,
    pub fallback_count: usize,
}

/// One inner iteration, recorded only when a dense trace is requested.
/// The full gradients behind `estimator_error_sq` are not counted.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerRecord<T> {
    pub outer_index: usize,
    /// Inner index `k` of the estimator `v_k` that was applied.
    pub inner_index: usize,
    pub eta: T,
    pub fallback: bool,
    /// Sampled curvature `Δwᵀ Δg / ‖Δw‖²` behind a curvature-based step.
    pub curvature: Option<T>,
    /// `‖∇P(w_k) - v_k‖²`.
    pub estimator_error_sq: T,
    /// `‖v_k‖²`.
    pub estimator_norm_sq: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace<T> {
    pub records: Vec<TraceRecord<T>>,
    pub initial_value: T,
    pub initial_grad_norm_sq: T,
    pub final_w: DenseVector<T>,
    pub total_component_grad_evals: u64,
    pub total_stepsize_grad_evals: u64,
    pub n: usize,
    pub inner: Vec<InnerRecord<T>>,
}

impl<T: Real> RunTrace<T> {
    pub fn final_record(&self) -> Option<&TraceRecord<T>> {
        self.records.last()
    }

    pub fn total_fallbacks(&self) -> usize {
        self.records.iter().map(|r| r.fallback_count).sum()
    }

    /// Writes the per-outer-loop records as CSV with [`TRACE_CSV_HEADER`].
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_CSV_HEADER)?;
        for r in &self.records {
            w.write_record(record_fields(r))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Field values of a record in [`TRACE_CSV_HEADER`] order.
pub fn record_fields<T: Real>(r: &TraceRecord<T>) -> [String; 9] {
    [
        r.outer_index.to_string(),
        r.effective_passes.to_string(),
        r.passes_incl_stepsize.to_string(),
        format!("{:e}", r.objective_value),
        format!("{:e}", r.grad_norm_sq),
        format!("{:e}", r.steps.min),
        format!("{:e}", r.steps.mean),
        format!("{:e}", r.steps.max),
        r.fallback_count.to_string(),
    ]
}
