//! Stochastic gradient estimators.

use super::SolverError;
use crate::linalg::DenseVector;
use crate::objective::{Metered, Objective};
use crate::scalar::Real;

/// `base + (a - c)` coordinate-wise. Exact when `base == c` (the result is
/// `a`) or when `a == c` (the result is `base`).
pub(crate) fn add_difference<T: Real>(base: &[T], a: &[T], c: &[T]) -> DenseVector<T> {
    DenseVector::from_vec(
        base.iter()
            .zip(a.iter().zip(c))
            .map(|(&b, (&a, &c))| {
                if b == c {
                    a
                } else if a == c {
                    b
                } else {
                    b + (a - c)
                }
            })
            .collect(),
    )
}

/// Recursive estimator `v_k = ∇P_S(w_k) - ∇P_S(w_{k-1}) + v_{k-1}`.
/// Costs `2|S|` component gradients.
pub fn sarah_estimator_update<T: Real, O: Objective<T> + ?Sized>(
    v_prev: &DenseVector<T>,
    obj: &Metered<'_, T, O>,
    batch: &[usize],
    w_k: &DenseVector<T>,
    w_prev: &DenseVector<T>,
) -> Result<DenseVector<T>, SolverError<T>> {
    let g_k = obj.minibatch_gradient(batch, w_k)?;
    let g_prev = obj.minibatch_gradient(batch, w_prev)?;
    Ok(add_difference(v_prev, &g_k, &g_prev))
}

/// Variance-reduced estimator `v_k = ∇P_S(w_k) - ∇P_S(w̃) + ∇P(w̃)`.
/// Costs `2|S|` component gradients; `fullgrad_snapshot` must be `∇P(w̃)`.
pub fn svrg_estimator<T: Real, O: Objective<T> + ?Sized>(
    obj: &Metered<'_, T, O>,
    batch: &[usize],
    w_k: &DenseVector<T>,
    snapshot: &DenseVector<T>,
    fullgrad_snapshot: &DenseVector<T>,
) -> Result<DenseVector<T>, SolverError<T>> {
    let g_k = obj.minibatch_gradient(batch, w_k)?;
    let g_snap = obj.minibatch_gradient(batch, snapshot)?;
    Ok(add_difference(fullgrad_snapshot, &g_k, &g_snap))
}
