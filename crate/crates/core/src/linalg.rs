//! Dense and sparse vectors.
//!
//! Only the handful of kernels the solvers need: sparse-dense dot products,
//! sparse axpy into a dense accumulator, and a few dense helpers.

use std::ops::{Deref, DerefMut, Index, IndexMut};

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("indices and values have different lengths ({indices} vs {values})")]
    LengthMismatch { indices: usize, values: usize },
    #[error("indices not strictly increasing at position {position}")]
    NotIncreasing { position: usize },
}

#[inline]
fn check_dim(expected: usize, found: usize) -> Result<(), LinalgError> {
    if expected == found {
        Ok(())
    } else {
        Err(LinalgError::DimensionMismatch { expected, found })
    }
}

/// Dense column vector (iterates, gradients, estimators).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DenseVector<T> {
    values: Vec<T>,
}

impl<T: Real> DenseVector<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            values: vec![T::zero(); dim],
        }
    }

    pub fn from_vec(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn norm_sq(&self) -> T {
        norm_sq(self)
    }

    pub fn dot(&self, other: &Self) -> Result<T, LinalgError> {
        check_dim(self.len(), other.len())?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b))
    }

    /// `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        check_dim(self.len(), other.len())?;
        Ok(Self::from_vec(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a - b)
                .collect(),
        ))
    }

    /// `self += alpha * x`.
    pub fn axpy(&mut self, alpha: T, x: &Self) -> Result<(), LinalgError> {
        check_dim(self.len(), x.len())?;
        if alpha == T::zero() {
            return Ok(());
        }
        for (y, &xv) in self.values.iter_mut().zip(&x.values) {
            *y += alpha * xv;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: T) {
        for v in &mut self.values {
            *v *= alpha;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Real>(&self) -> DenseVector<U> {
        DenseVector::from_vec(
            self.values
                .iter()
                .map(|v| U::from_f64(v.to_f64().unwrap_or(f64::NAN)).unwrap_or(U::nan()))
                .collect(),
        )
    }
}

impl<T> Deref for DenseVector<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.values
    }
}

impl<T> DerefMut for DenseVector<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.values
    }
}

impl<T> Index<usize> for DenseVector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.values[i]
    }
}

impl<T> IndexMut<usize> for DenseVector<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.values[i]
    }
}

impl<T: Real> From<Vec<T>> for DenseVector<T> {
    fn from(values: Vec<T>) -> Self {
        Self::from_vec(values)
    }
}

/// Sparse vector in canonical form: strictly increasing indices, no stored zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector<T> {
    indices: Vec<usize>,
    values: Vec<T>,
    dim: usize,
}

impl<T: Real> SparseVector<T> {
    pub fn empty(dim: usize) -> Self {
        Self {
            indices: Vec::new(),
            values: Vec::new(),
            dim,
        }
    }

    /// Builds a canonical sparse vector from arbitrary `(index, value)` pairs.
    /// Entries are sorted, duplicates summed, and zeros dropped.
    pub fn from_pairs<I>(dim: usize, pairs: I) -> Result<Self, LinalgError>
    where
        I: IntoIterator<Item = (usize, T)>,
    {
        let mut pairs: Vec<(usize, T)> = pairs.into_iter().collect();
        if let Some(&(index, _)) = pairs.iter().find(|(i, _)| *i >= dim) {
            return Err(LinalgError::IndexOutOfRange { index, dim });
        }
        pairs.sort_by_key(|&(i, _)| i);
        let mut indices: Vec<usize> = Vec::with_capacity(pairs.len());
        let mut values: Vec<T> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            match indices.last() {
                Some(&last) if last == i => {
                    let slot = values.last_mut().expect("paired with index");
                    *slot += v;
                }
                _ => {
                    indices.push(i);
                    values.push(v);
                }
            }
        }
        let (indices, values) = indices
            .into_iter()
            .zip(values)
            .filter(|(_, v)| *v != T::zero())
            .unzip();
        Ok(Self {
            indices,
            values,
            dim,
        })
    }

    /// Builds from already-sorted parallel arrays, rejecting anything that is
    /// not strictly increasing or in range. Stored zeros are dropped.
    pub fn from_sorted(dim: usize, indices: Vec<usize>, values: Vec<T>) -> Result<Self, LinalgError> {
        if indices.len() != values.len() {
            return Err(LinalgError::LengthMismatch {
                indices: indices.len(),
                values: values.len(),
            });
        }
        for (pos, w) in indices.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(LinalgError::NotIncreasing { position: pos + 1 });
            }
        }
        if let Some(&index) = indices.last() {
            if index >= dim {
                return Err(LinalgError::IndexOutOfRange { index, dim });
            }
        }
        let (indices, values) = indices
            .into_iter()
            .zip(values)
            .filter(|(_, v)| *v != T::zero())
            .unzip();
        Ok(Self {
            indices,
            values,
            dim,
        })
    }

    pub fn from_dense(v: &DenseVector<T>) -> Self {
        let (indices, values) = v
            .iter()
            .enumerate()
            .filter(|(_, x)| **x != T::zero())
            .map(|(i, &x)| (i, x))
            .unzip();
        Self {
            indices,
            values,
            dim: v.len(),
        }
    }

    pub fn to_dense(&self) -> DenseVector<T> {
        let mut out = DenseVector::zeros(self.dim);
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out[i] = v;
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn norm_sq(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, &v| acc + v * v)
    }

    /// Returns a copy with every stored value multiplied by `alpha`.
    pub fn scaled(&self, alpha: T) -> Self {
        self.map_values(|v| v * alpha)
    }

    /// Every value divided by `divisor`; correctly rounded per entry,
    /// unlike scaling by the reciprocal.
    pub fn divided(&self, divisor: T) -> Self {
        self.map_values(|v| v / divisor)
    }

    fn map_values(&self, f: impl Fn(T) -> T) -> Self {
        let (indices, values) = self
            .iter()
            .map(|(i, v)| (i, f(v)))
            .filter(|(_, v)| *v != T::zero())
            .unzip();
        Self {
            indices,
            values,
            dim: self.dim,
        }
    }

    /// Same entries in a larger ambient space.
    pub fn with_dim(&self, dim: usize) -> Result<Self, LinalgError> {
        if let Some(&index) = self.indices.last() {
            if index >= dim {
                return Err(LinalgError::IndexOutOfRange { index, dim });
            }
        }
        Ok(Self {
            indices: self.indices.clone(),
            values: self.values.clone(),
            dim,
        })
    }

    pub fn cast<U: Real>(&self) -> SparseVector<U> {
        SparseVector {
            indices: self.indices.clone(),
            values: self
                .values
                .iter()
                .map(|v| U::from_f64(v.to_f64().unwrap_or(f64::NAN)).unwrap_or(U::nan()))
                .collect(),
            dim: self.dim,
        }
    }
}

/// `Σ_j a.values[j] * b[a.indices[j]]`.
pub fn dot<T: Real>(a: &SparseVector<T>, b: &DenseVector<T>) -> Result<T, LinalgError> {
    check_dim(a.dim, b.len())?;
    Ok(dot_unchecked(a, b))
}

#[inline]
pub(crate) fn dot_unchecked<T: Real>(a: &SparseVector<T>, b: &[T]) -> T {
    a.indices
        .iter()
        .zip(&a.values)
        .fold(T::zero(), |acc, (&i, &v)| acc + v * b[i])
}

/// Returns `y + alpha * x`.
pub fn axpy_sparse<T: Real>(
    alpha: T,
    x: &SparseVector<T>,
    y: &DenseVector<T>,
) -> Result<DenseVector<T>, LinalgError> {
    let mut out = y.clone();
    axpy_sparse_into(alpha, x, &mut out)?;
    Ok(out)
}

/// `y += alpha * x` in place. `alpha == 0` leaves `y` bit-identical.
pub fn axpy_sparse_into<T: Real>(
    alpha: T,
    x: &SparseVector<T>,
    y: &mut [T],
) -> Result<(), LinalgError> {
    check_dim(x.dim, y.len())?;
    if alpha == T::zero() {
        return Ok(());
    }
    for (&i, &v) in x.indices.iter().zip(&x.values) {
        y[i] += alpha * v;
    }
    Ok(())
}

pub fn norm_sq<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc + x * x)
}
