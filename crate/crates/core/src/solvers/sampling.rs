use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SolverError;
use crate::scalar::Real;

/// Uniform random `k`-subset of `0..n`, returned in increasing order.
pub fn sample_without_replacement<T: Real, R: Rng + ?Sized>(
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>, SolverError<T>> {
    if k == 0 || k > n {
        return Err(SolverError::InvalidConfig(format!(
            "cannot sample {k} distinct indices from {n}"
        )));
    }
    let mut s = index::sample(rng, n, k).into_vec();
    s.sort_unstable();
    Ok(s)
}

/// Independent random streams of one run: gradient mini-batches `S` and
/// step-size sub-samples `S_H`. Keeping them apart means a run that never
/// draws `S_H` sees exactly the same `S` sequence as one that does.
pub(crate) struct RunRng {
    pub batches: ChaCha8Rng,
    pub step_samples: ChaCha8Rng,
}

impl RunRng {
    pub fn new(seed: u64) -> Self {
        let batches = ChaCha8Rng::seed_from_u64(seed);
        let mut step_samples = ChaCha8Rng::seed_from_u64(seed);
        step_samples.set_stream(1);
        Self { batches, step_samples }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draw(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        sample_without_replacement::<f64, _>(n, k, rng).unwrap()
    }

    #[test]
    fn forced_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(draw(5, 5, &mut rng), vec![0, 1, 2, 3, 4]);
        assert_eq!(draw(1, 1, &mut rng), vec![0]);
        assert!(sample_without_replacement::<f64, _>(3, 4, &mut rng).is_err());
        assert!(sample_without_replacement::<f64, _>(3, 0, &mut rng).is_err());
    }

    #[test]
    fn distinct_sorted_and_deterministic() {
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let s = draw(50, 9, &mut a);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(s, draw(50, 9, &mut b));
        }
    }

    #[test]
    fn marginal_inclusion_probability() {
        // each index of 0..10 should appear in a 3-subset with probability 0.3
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let draws = 100_000;
        let mut hits = [0usize; 10];
        for _ in 0..draws {
            for i in draw(10, 3, &mut rng) {
                hits[i] += 1;
            }
        }
        for h in hits {
            let p = h as f64 / draws as f64;
            assert!((p - 0.3).abs() <= 0.01, "inclusion frequency {p}");
        }
    }

    #[test]
    fn streams_are_independent() {
        let mut r = RunRng::new(3);
        let a = draw(100, 5, &mut r.batches);
        let b = draw(100, 5, &mut r.step_samples);
        assert_ne!(a, b);
        let mut fresh = RunRng::new(3);
        assert_eq!(draw(100, 5, &mut fresh.batches), a);
    }
}
