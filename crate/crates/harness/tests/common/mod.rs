#![allow(dead_code)]

use std::fs;
use std::path::Path;

use mbsarah::objective::Objective;
use mbsarah::{generate_synthetic, normalize_rows, Dataset, DenseVector, Example, LogisticF64, SparseVector, SyntheticSpec};

/// Synthetic logistic problem with n = 1000, d = 20, unit rows and λ = 0.01.
pub fn desk_problem() -> LogisticF64 {
    let ds = generate_synthetic(&SyntheticSpec::classification(1000, 20, 0)).unwrap();
    LogisticF64::new(normalize_rows(&ds).0, 0.01).unwrap()
}

pub fn dataset(d: usize, rows: &[(&[(usize, f64)], f64)]) -> Dataset<f64> {
    let examples = rows
        .iter()
        .map(|(pairs, label)| Example {
            features: SparseVector::from_pairs(d, pairs.iter().copied()).unwrap(),
            label: *label,
        })
        .collect();
    Dataset::new("hand", d, examples).unwrap()
}

/// Deterministic, seed-dependent point with coordinates in (-scale, scale).
pub fn scattered_point(d: usize, seed: u64, scale: f64) -> DenseVector<f64> {
    DenseVector::from_vec((0..d).map(|j| scale * ((seed * 31 + j as u64 * 7 + 1) as f64 * 1.618).sin()).collect())
}

/// Plain full-gradient descent with step 1/L, stopped on a gradient tolerance.
pub fn gradient_descent(obj: &dyn Objective<f64>, tolerance: f64, max_iter: usize) -> DenseVector<f64> {
    let eta = 1.0 / obj.constants().l;
    let mut w = DenseVector::zeros(obj.dim());
    for _ in 0..max_iter {
        let g = obj.full_gradient(&w).unwrap();
        if g.norm_sq() <= tolerance {
            break;
        }
        w.axpy(-eta, &g).unwrap();
    }
    w
}

pub fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

/// Spec text for the synthetic desk problem; `runs` is appended verbatim.
pub fn desk_spec(n: usize, d: usize, seeds: &[u64], runs: &str) -> String {
    format!(
        "[experiment]\ndataset = \"synthetic\"\nlambda = 0.01\nnormalize = true\nseeds = {seeds:?}\n\
         output_dir = \"out\"\ncache_dir = \"cache\"\n\n[synthetic]\nn = {n}\nd = {d}\n\n{runs}"
    )
}
