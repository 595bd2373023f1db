//! Finite-sum objectives `P(w) = (1/n) Σ f_i(w)` with L2 regularization.
//!
//! Two components are provided:
//!
//! * [`LogisticL2`]: `f_i(w) = log(1 + exp(-y_i x_iᵀw)) + (λ/2)‖w‖²`
//! * [`RidgeL2`]: `f_i(w) = ½(x_iᵀw - y_i)² + (λ/2)‖w‖²`
//!
//! Gradients of a batch are accumulated as the mean of the data terms plus
//! `λw`, and the full gradient is literally the batch gradient over
//! `0..n`, so the two agree bit for bit.

use std::cell::Cell;

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::data::Dataset;
use crate::linalg::{axpy_sparse_into, dot_unchecked, norm_sq, DenseVector};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObjectiveError {
    #[error("dimension mismatch: objective has dimension {expected}, vector has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("component index {index} out of range (n = {n})")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("empty mini-batch")]
    EmptyBatch,
    #[error("invalid regularization weight {0}")]
    InvalidLambda(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    Logistic,
    Ridge,
}

impl ObjectiveKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Logistic => "logistic",
            Self::Ridge => "ridge",
        }
    }
}

/// Smoothness and strong-convexity constants.
///
/// `l` bounds the Lipschitz constant of every component gradient. `mu` is the
/// strong-convexity modulus of `P`; `mu_component` is one every `f_i` (and
/// hence every sub-sample mean) satisfies, which is what bounds a sampled
/// curvature ratio from below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveConstants<T> {
    pub l: T,
    pub mu: T,
    pub mu_component: T,
    pub n: usize,
}

pub trait Objective<T: Real>: Send + Sync {
    fn kind(&self) -> ObjectiveKind;
    fn dataset(&self) -> &Dataset<T>;
    fn lambda(&self) -> T;
    fn constants(&self) -> ObjectiveConstants<T>;

    /// Data part of `f_i` (no regularizer).
    fn data_loss(&self, i: usize, w: &[T]) -> T;

    /// `out += scale * ∇(data part of f_i)(w)`.
    fn add_data_gradient(&self, i: usize, w: &[T], scale: T, out: &mut [T]);

    fn n(&self) -> usize {
        self.dataset().len()
    }

    fn dim(&self) -> usize {
        self.dataset().dim()
    }

    fn check_dim(&self, w: &[T]) -> Result<(), ObjectiveError> {
        if w.len() == self.dim() {
            Ok(())
        } else {
            Err(ObjectiveError::DimensionMismatch {
                expected: self.dim(),
                found: w.len(),
            })
        }
    }

    fn value(&self, w: &DenseVector<T>) -> Result<T, ObjectiveError> {
        self.check_dim(w)?;
        let n = self.n();
        let data = (0..n).fold(T::zero(), |acc, i| acc + self.data_loss(i, w)) / T::from_count(n);
        Ok(data + T::lit(0.5) * self.lambda() * norm_sq(w))
    }

    fn component_value(&self, i: usize, w: &DenseVector<T>) -> Result<T, ObjectiveError> {
        self.check_dim(w)?;
        check_index(i, self.n())?;
        Ok(self.data_loss(i, w) + T::lit(0.5) * self.lambda() * norm_sq(w))
    }

    fn component_gradient(&self, i: usize, w: &DenseVector<T>) -> Result<DenseVector<T>, ObjectiveError> {
        self.minibatch_gradient(&[i], w)
    }

    /// `(1/|S|) Σ_{i∈S} ∇f_i(w)`.
    fn minibatch_gradient(&self, batch: &[usize], w: &DenseVector<T>) -> Result<DenseVector<T>, ObjectiveError> {
        self.check_dim(w)?;
        if batch.is_empty() {
            return Err(ObjectiveError::EmptyBatch);
        }
        let n = self.n();
        for &i in batch {
            check_index(i, n)?;
        }
        Ok(mean_gradient(self, batch.iter().copied(), batch.len(), w))
    }

    fn full_gradient(&self, w: &DenseVector<T>) -> Result<DenseVector<T>, ObjectiveError> {
        self.check_dim(w)?;
        Ok(mean_gradient(self, 0..self.n(), self.n(), w))
    }
}

fn check_index(i: usize, n: usize) -> Result<(), ObjectiveError> {
    if i < n {
        Ok(())
    } else {
        Err(ObjectiveError::IndexOutOfRange { index: i, n })
    }
}

fn mean_gradient<T, O, I>(obj: &O, batch: I, count: usize, w: &[T]) -> DenseVector<T>
where
    T: Real,
    O: Objective<T> + ?Sized,
    I: Iterator<Item = usize>,
{
    let mut g = DenseVector::zeros(w.len());
    for i in batch {
        obj.add_data_gradient(i, w, T::one(), &mut g);
    }
    let count = T::from_count(count);
    let lambda = obj.lambda();
    for (gj, &wj) in g.iter_mut().zip(w) {
        *gj = *gj / count + lambda * wj;
    }
    g
}

/// `log(1 + exp(-t))` without overflow.
#[inline]
pub fn softplus_neg<T: Real>(t: T) -> T {
    (-t).max(T::zero()) + (-t.abs()).exp().ln_1p()
}

/// `1 / (1 + exp(t))` without overflow.
#[inline]
pub fn sigmoid_neg<T: Real>(t: T) -> T {
    if t >= T::zero() {
        let e = (-t).exp();
        e / (T::one() + e)
    } else {
        T::one() / (T::one() + t.exp())
    }
}

/// L2-regularized logistic regression over ±1 labels.
#[derive(Debug, Clone)]
pub struct LogisticL2<T> {
    dataset: Dataset<T>,
    lambda: T,
}

impl<T: Real> LogisticL2<T> {
    pub fn new(dataset: Dataset<T>, lambda: T) -> Result<Self, ObjectiveError> {
        if !(lambda > T::zero() && lambda.is_finite()) {
            return Err(ObjectiveError::InvalidLambda(lambda.to_string()));
        }
        Ok(Self { dataset, lambda })
    }
}

impl<T: Real> Objective<T> for LogisticL2<T> {
    fn kind(&self) -> ObjectiveKind {
        ObjectiveKind::Logistic
    }

    fn dataset(&self) -> &Dataset<T> {
        &self.dataset
    }

    fn lambda(&self) -> T {
        self.lambda
    }

    fn constants(&self) -> ObjectiveConstants<T> {
        ObjectiveConstants {
            l: T::lit(0.25) * self.dataset.max_row_norm_sq() + self.lambda,
            mu: self.lambda,
            mu_component: self.lambda,
            n: self.dataset.len(),
        }
    }

    fn data_loss(&self, i: usize, w: &[T]) -> T {
        let ex = self.dataset.example(i);
        softplus_neg(ex.label * dot_unchecked(&ex.features, w))
    }

    fn add_data_gradient(&self, i: usize, w: &[T], scale: T, out: &mut [T]) {
        let ex = self.dataset.example(i);
        let t = ex.label * dot_unchecked(&ex.features, w);
        let coef = -ex.label * sigmoid_neg(t) * scale;
        axpy_sparse_into(coef, &ex.features, out).expect("dimension checked by caller");
    }
}

/// Largest dimension for which ridge computes the data-term minimum eigenvalue.
pub const DEFAULT_EIGEN_DIM_LIMIT: usize = 256;

/// L2-regularized least squares.
#[derive(Debug, Clone)]
pub struct RidgeL2<T> {
    dataset: Dataset<T>,
    lambda: T,
    eigen_dim_limit: usize,
}

impl<T: Real> RidgeL2<T> {
    pub fn new(dataset: Dataset<T>, lambda: T) -> Result<Self, ObjectiveError> {
        if !(lambda >= T::zero() && lambda.is_finite()) {
            return Err(ObjectiveError::InvalidLambda(lambda.to_string()));
        }
        Ok(Self {
            dataset,
            lambda,
            eigen_dim_limit: DEFAULT_EIGEN_DIM_LIMIT,
        })
    }

    pub fn with_eigen_dim_limit(mut self, limit: usize) -> Self {
        self.eigen_dim_limit = limit;
        self
    }

    /// Smallest eigenvalue of `(1/n) Σ x_i x_iᵀ`, computed in `f64`.
    fn min_data_eigenvalue(&self) -> f64 {
        let d = self.dataset.dim();
        let n = self.dataset.len() as f64;
        let mut gram = DMatrix::<f64>::zeros(d, d);
        for ex in self.dataset.examples() {
            let pairs: Vec<(usize, f64)> = ex
                .features
                .iter()
                .map(|(i, v)| (i, v.to_f64().unwrap_or(0.0)))
                .collect();
            for &(a, va) in &pairs {
                for &(b, vb) in &pairs {
                    gram[(a, b)] += va * vb / n;
                }
            }
        }
        let eig = SymmetricEigen::new(gram);
        eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min).max(0.0)
    }
}

impl<T: Real> Objective<T> for RidgeL2<T> {
    fn kind(&self) -> ObjectiveKind {
        ObjectiveKind::Ridge
    }

    fn dataset(&self) -> &Dataset<T> {
        &self.dataset
    }

    fn lambda(&self) -> T {
        self.lambda
    }

    fn constants(&self) -> ObjectiveConstants<T> {
        let d = self.dataset.dim();
        let data_mu = if d <= self.eigen_dim_limit {
            T::lit(self.min_data_eigenvalue())
        } else {
            T::zero()
        };
        // in one dimension each x_i x_iᵀ is the scalar x_i², so components share a floor
        let component_floor = if d == 1 {
            self.dataset
                .examples()
                .iter()
                .map(|e| e.features.norm_sq())
                .fold(T::infinity(), T::min)
        } else {
            T::zero()
        };
        ObjectiveConstants {
            l: self.dataset.max_row_norm_sq() + self.lambda,
            mu: self.lambda + data_mu,
            mu_component: self.lambda + component_floor,
            n: self.dataset.len(),
        }
    }

    fn data_loss(&self, i: usize, w: &[T]) -> T {
        let ex = self.dataset.example(i);
        let r = dot_unchecked(&ex.features, w) - ex.label;
        T::lit(0.5) * r * r
    }

    fn add_data_gradient(&self, i: usize, w: &[T], scale: T, out: &mut [T]) {
        let ex = self.dataset.example(i);
        let r = dot_unchecked(&ex.features, w) - ex.label;
        axpy_sparse_into(r * scale, &ex.features, out).expect("dimension checked by caller");
    }
}

/// Per-run view of an objective that counts component-gradient evaluations.
///
/// Every gradient of a batch `S` adds `|S|`; a full gradient adds `n`.
/// Function values are not counted.
pub struct Metered<'a, T: Real, O: Objective<T> + ?Sized> {
    inner: &'a O,
    evals: Cell<u64>,
    _scalar: std::marker::PhantomData<T>,
}

impl<'a, T: Real, O: Objective<T> + ?Sized> Metered<'a, T, O> {
    pub fn new(inner: &'a O) -> Self {
        Self {
            inner,
            evals: Cell::new(0),
            _scalar: std::marker::PhantomData,
        }
    }

    pub fn inner(&self) -> &'a O {
        self.inner
    }

    pub fn evals(&self) -> u64 {
        self.evals.get()
    }

    fn charge(&self, k: usize) {
        self.evals.set(self.evals.get() + k as u64);
    }

    pub fn minibatch_gradient(&self, batch: &[usize], w: &DenseVector<T>) -> Result<DenseVector<T>, ObjectiveError> {
        let g = self.inner.minibatch_gradient(batch, w)?;
        self.charge(batch.len());
        Ok(g)
    }

    pub fn full_gradient(&self, w: &DenseVector<T>) -> Result<DenseVector<T>, ObjectiveError> {
        let g = self.inner.full_gradient(w)?;
        self.charge(self.inner.n());
        Ok(g)
    }

    pub fn component_gradient(&self, i: usize, w: &DenseVector<T>) -> Result<DenseVector<T>, ObjectiveError> {
        let g = self.inner.component_gradient(i, w)?;
        self.charge(1);
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Example, TaskKind};
    use crate::linalg::SparseVector;

    fn dataset(rows: &[(&[f64], f64)]) -> Dataset<f64> {
        let d = rows[0].0.len();
        let examples = rows
            .iter()
            .map(|(x, y)| Example {
                features: SparseVector::from_dense(&DenseVector::from_vec(x.to_vec())),
                label: *y,
            })
            .collect();
        Dataset::new("toy", d, examples).unwrap()
    }

    fn toy() -> LogisticL2<f64> {
        let ds = dataset(&[(&[1.0, -2.0, 0.5], 1.0), (&[0.0, 1.5, -1.0], -1.0), (&[2.0, 0.25, 1.0], 1.0)]);
        LogisticL2::new(ds, 0.1).unwrap()
    }

    #[test]
    fn logistic_value_at_zero_is_log2() {
        let obj = toy();
        let v = obj.value(&DenseVector::zeros(3)).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn logistic_gradient_at_zero() {
        let obj = toy();
        for i in 0..3 {
            let g = obj.component_gradient(i, &DenseVector::zeros(3)).unwrap();
            let ex = obj.dataset().example(i);
            let expected = ex.features.to_dense();
            for j in 0..3 {
                assert_eq!(g[j], -ex.label * expected[j] / 2.0);
            }
        }
    }

    #[test]
    fn softplus_is_overflow_safe() {
        assert_eq!(softplus_neg(1000.0f64), 0.0);
        assert!((softplus_neg(-1000.0f64) - 1000.0).abs() < 1e-12);
        assert!((softplus_neg(0.0f64) - std::f64::consts::LN_2).abs() < 1e-16);
        assert_eq!(sigmoid_neg(-1000.0f64), 1.0);
        assert_eq!(sigmoid_neg(1000.0f64), 0.0);
        let obj = toy();
        let w = DenseVector::from_vec(vec![1e4, -1e4, 3e3]);
        assert!(obj.value(&w).unwrap().is_finite());
        assert!(obj.full_gradient(&w).unwrap().is_finite());
    }

    #[test]
    fn ridge_perfect_fit_is_zero() {
        let ds = dataset(&[(&[1.0, 2.0], 5.0), (&[-1.0, 0.5], 0.0)]);
        let obj = RidgeL2::new(ds, 0.0).unwrap();
        let w = DenseVector::from_vec(vec![1.0, 2.0]);
        assert_eq!(obj.value(&w).unwrap(), 0.0);
    }

    #[test]
    fn ridge_zero_label_zero_gradient() {
        let ds = dataset(&[(&[1.0, 2.0], 0.0)]);
        let obj = RidgeL2::new(ds, 0.3).unwrap();
        let g = obj.component_gradient(0, &DenseVector::zeros(2)).unwrap();
        assert_eq!(g.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn batch_gradient_identities() {
        let obj = toy();
        let w = DenseVector::from_vec(vec![0.3, -0.2, 0.7]);
        let g1 = obj.component_gradient(1, &w).unwrap();
        assert_eq!(obj.minibatch_gradient(&[1], &w).unwrap(), g1);

        let all: Vec<usize> = (0..3).collect();
        assert_eq!(obj.minibatch_gradient(&all, &w).unwrap(), obj.full_gradient(&w).unwrap());

        let g0 = obj.component_gradient(0, &w).unwrap();
        let pair = obj.minibatch_gradient(&[0, 1], &w).unwrap();
        for j in 0..3 {
            assert!((pair[j] - (g0[j] + g1[j]) / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn full_gradient_closed_form_at_zero() {
        // symmetric features with balanced labels
        let ds = dataset(&[(&[1.0, 2.0], 1.0), (&[-1.0, -2.0], -1.0), (&[0.5, 0.0], 1.0), (&[-0.5, 0.0], -1.0)]);
        let obj = LogisticL2::new(ds, 0.5).unwrap();
        let g = obj.full_gradient(&DenseVector::zeros(2)).unwrap();
        let n = 4.0;
        let sum_yx = [1.0 + 1.0 + 0.5 + 0.5, 2.0 + 2.0];
        for j in 0..2 {
            assert!((g[j] + sum_yx[j] / (2.0 * n)).abs() < 1e-15);
        }
    }

    #[test]
    fn errors() {
        let obj = toy();
        let w = DenseVector::zeros(3);
        assert_eq!(
            obj.value(&DenseVector::zeros(2)),
            Err(ObjectiveError::DimensionMismatch { expected: 3, found: 2 })
        );
        assert_eq!(obj.component_gradient(3, &w), Err(ObjectiveError::IndexOutOfRange { index: 3, n: 3 }));
        assert_eq!(obj.minibatch_gradient(&[], &w), Err(ObjectiveError::EmptyBatch));
        assert!(LogisticL2::new(obj.dataset().clone(), 0.0).is_err());
        assert!(RidgeL2::new(obj.dataset().clone(), -1.0).is_err());
    }

    #[test]
    fn constants_closed_forms() {
        let ds = dataset(&[(&[1.0], 0.0)]);
        let c = RidgeL2::new(ds, 0.0).unwrap().constants();
        assert_eq!((c.l, c.mu, c.mu_component), (1.0, 1.0, 1.0));

        let ds = dataset(&[(&[0.6, 0.8], 1.0), (&[0.0, 1.0], -1.0)]);
        let c = LogisticL2::new(ds, 0.01).unwrap().constants();
        assert!((c.l - 0.26).abs() < 1e-15);
        assert_eq!(c.mu, 0.01);

        let ds = dataset(&[(&[1.0, 0.0], 0.0), (&[0.0, 2.0], 0.0)]);
        let c = RidgeL2::new(ds.clone(), 0.1).unwrap().constants();
        assert!((c.mu - 0.6).abs() < 1e-12);
        assert_eq!(c.mu_component, 0.1);
        let c = RidgeL2::new(ds, 0.1).unwrap().with_eigen_dim_limit(1).constants();
        assert_eq!(c.mu, 0.1);
    }

    #[test]
    fn metered_counts() {
        let obj = toy();
        let m = Metered::new(&obj);
        let w = DenseVector::zeros(3);
        m.full_gradient(&w).unwrap();
        m.minibatch_gradient(&[0, 2], &w).unwrap();
        m.component_gradient(1, &w).unwrap();
        assert_eq!(m.evals(), 3 + 2 + 1);
        assert!(m.minibatch_gradient(&[], &w).is_err());
        assert_eq!(m.evals(), 6);
    }

    #[test]
    fn regression_task_kind_is_accepted() {
        let _ = TaskKind::Regression;
        let ds = dataset(&[(&[1.0], 2.5)]);
        let obj = RidgeL2::new(ds, 0.0).unwrap();
        let w = DenseVector::from_vec(vec![2.5]);
        assert_eq!(obj.full_gradient(&w).unwrap().as_slice(), &[0.0]);
    }
}
