#![allow(dead_code)]

use mbsarah::{generate_synthetic, normalize_rows, Dataset, DenseVector, Example, LogisticF64, SparseVector, SyntheticSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense random classification set with entries in [-1, 1].
pub fn toy_classification(n: usize, d: usize, seed: u64) -> Dataset<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let examples = (0..n)
        .map(|i| {
            let pairs: Vec<_> = (0..d).map(|j| (j, rng.random_range(-1.0..1.0))).collect();
            Example {
                features: SparseVector::from_pairs(d, pairs).unwrap(),
                label: if i % 2 == 0 { 1.0 } else { -1.0 },
            }
        })
        .collect();
    Dataset::new("toy", d, examples).unwrap()
}

pub fn toy_regression(n: usize, d: usize, seed: u64) -> Dataset<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let examples = (0..n)
        .map(|_| {
            let pairs: Vec<_> = (0..d).map(|j| (j, rng.random_range(-1.0..1.0))).collect();
            Example {
                features: SparseVector::from_pairs(d, pairs).unwrap(),
                label: rng.random_range(-2.0..2.0),
            }
        })
        .collect();
    Dataset::new("toy-reg", d, examples).unwrap()
}

pub fn random_point(d: usize, scale: f64, rng: &mut impl Rng) -> DenseVector<f64> {
    DenseVector::from_vec((0..d).map(|_| rng.random_range(-scale..scale)).collect())
}

/// The desk-scale problem: n = 1000, d = 20, unit rows, λ = 0.01.
pub fn desk_problem() -> LogisticF64 {
    let ds = generate_synthetic(&SyntheticSpec::classification(1000, 20, 0)).unwrap();
    LogisticF64::new(normalize_rows(&ds).0, 0.01).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
