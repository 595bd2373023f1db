use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Dataset, DatasetError, Example, TaskKind};
use crate::linalg::SparseVector;

/// Fraction of classification labels flipped after labeling by the planted model.
pub const LABEL_FLIP_RATE: f64 = 0.05;
/// Standard deviation of the additive noise on regression targets.
pub const REGRESSION_NOISE: f64 = 0.01;

/// Parameters of a seeded synthetic problem.
///
/// Features are Gaussian with column `j` scaled by
/// `condition_hint^(-j / (2(d-1)))`, so the feature covariance spectrum spans
/// a ratio of roughly `condition_hint`. A value of 1 gives isotropic features.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub condition_hint: f64,
    pub task: TaskKind,
}

impl SyntheticSpec {
    pub fn classification(n: usize, d: usize, seed: u64) -> Self {
        Self {
            n,
            d,
            seed,
            condition_hint: 1.0,
            task: TaskKind::Classification,
        }
    }

    pub fn regression(n: usize, d: usize, seed: u64) -> Self {
        Self {
            task: TaskKind::Regression,
            ..Self::classification(n, d, seed)
        }
    }
}

/// Generates a dataset that is a pure function of `spec`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset<f64>, DatasetError> {
    if spec.n == 0 || spec.d == 0 {
        return Err(DatasetError::Empty);
    }
    let hint = if spec.condition_hint.is_finite() && spec.condition_hint > 0.0 {
        spec.condition_hint
    } else {
        1.0
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.d;
    let scales: Vec<f64> = (0..d)
        .map(|j| {
            if d == 1 {
                1.0
            } else {
                hint.powf(-(j as f64) / (2.0 * (d - 1) as f64))
            }
        })
        .collect();
    let truth: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();

    let mut examples = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let x: Vec<f64> = scales
            .iter()
            .map(|s| s * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let margin: f64 = x.iter().zip(&truth).map(|(a, b)| a * b).sum();
        let label = match spec.task {
            TaskKind::Classification => {
                if margin >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            TaskKind::Regression => margin + REGRESSION_NOISE * rng.sample::<f64, _>(StandardNormal),
        };
        let features = SparseVector::from_pairs(d, x.into_iter().enumerate()).expect("indices < d");
        examples.push(Example { features, label });
    }

    if spec.task == TaskKind::Classification {
        let flips = (LABEL_FLIP_RATE * spec.n as f64).round() as usize;
        for i in index::sample(&mut rng, spec.n, flips.min(spec.n)) {
            examples[i].label = -examples[i].label;
        }
    }

    let name = format!(
        "synthetic-{}-n{}-d{}-s{}",
        match spec.task {
            TaskKind::Classification => "cls",
            TaskKind::Regression => "reg",
        },
        spec.n,
        spec.d,
        spec.seed
    );
    Dataset::new(name, d, examples)
}
