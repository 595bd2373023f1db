mod common;

use common::{desk_problem, toy_classification};
use mbsarah::objective::Objective;
use mbsarah::solvers::{run_mb_sarah_rbb, run_ms2gd_rbb};
use mbsarah::stepsize::upper_bound;
use mbsarah::{run, DenseVector, LogisticF64, Method, RunTrace, SolverConfigF64, StepRule};
use proptest::prelude::*;

fn rule_for(method: Method, b_h: usize) -> StepRule<f64> {
    match method {
        Method::MbSarahRbb => StepRule::rbb(b_h),
        Method::Ms2gdRbb => StepRule::rbb_with(1.0, b_h, 0.1),
        Method::SvrgBb => StepRule::epoch_bb(0.1),
        Method::Sgd => StepRule::InverseTime { eta_0: 0.5, decay: 0.01 },
        _ => StepRule::fixed(0.3),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn runs_are_deterministic(seed in any::<u64>(), which in 0usize..7) {
        let obj = LogisticF64::new(toy_classification(30, 4, 3), 0.05).unwrap();
        let method = Method::ALL[which];
        let cfg = SolverConfigF64::new(method, 12, 3, 3, rule_for(method, 6)).with_seed(seed);
        prop_assert_eq!(run(&obj, &cfg).unwrap(), run(&obj, &cfg).unwrap());
    }

    #[test]
    fn gradient_accounting_is_exact(
        n in 2usize..40, m in 1usize..30, b_frac in 0.0f64..1.0, bh_frac in 0.0f64..1.0,
        outer in 1usize..4, seed in any::<u64>(), recursive in any::<bool>(),
    ) {
        let b = 1 + ((n - 1) as f64 * b_frac) as usize;
        let b_h = 1 + ((n - 1) as f64 * bh_frac) as usize;
        let obj = LogisticF64::new(toy_classification(n, 3, 9), 0.1).unwrap();
        let (method, gamma) = if recursive { (Method::MbSarahRbb, 0.1) } else { (Method::Ms2gdRbb, 1.0) };
        let cfg = SolverConfigF64::new(method, m, b, outer, StepRule::rbb_with(gamma, b_h, 0.1)).with_seed(seed);
        let t = run(&obj, &cfg).unwrap();
        prop_assert_eq!(t.total_component_grad_evals, (outer * (n + 2 * b * (m - 1))) as u64);
        prop_assert_eq!(t.total_stepsize_grad_evals, (outer * 2 * b_h * (m - 1)) as u64);
        let last = t.final_record().unwrap();
        prop_assert_eq!(last.effective_passes, t.total_component_grad_evals as f64 / n as f64);
    }

    #[test]
    fn fixed_rule_matches_plain_sarah(seed in any::<u64>(), eta in 0.01f64..2.0, b in 1usize..10) {
        let obj = LogisticF64::new(toy_classification(20, 3, 4), 0.05).unwrap();
        let a = SolverConfigF64::new(Method::MbSarahRbb, 15, b, 3, StepRule::fixed(eta)).with_seed(seed);
        let plain = SolverConfigF64 { method: Method::MbSarahFixed, ..a.clone() };
        prop_assert_eq!(run_mb_sarah_rbb(&obj, &a).unwrap(), run_mb_sarah_rbb(&obj, &plain).unwrap());
    }

    #[test]
    fn accepted_steps_respect_the_ceiling(seed in any::<u64>(), b_h in 1usize..20, gamma in 0.01f64..1.0) {
        let obj = LogisticF64::new(toy_classification(20, 4, 5), 0.05).unwrap();
        let cfg = SolverConfigF64::new(Method::MbSarahRbb, 25, 2, 2, StepRule::rbb_with(gamma, b_h, 0.01))
            .with_seed(seed)
            .with_dense_trace(true);
        let t = run(&obj, &cfg).unwrap();
        let ceiling = upper_bound(obj.constants().mu_component, gamma, b_h).unwrap();
        for r in t.inner.iter().filter(|r| r.inner_index > 0 && !r.fallback) {
            prop_assert!(r.eta <= ceiling + 1e-12);
        }
    }
}

#[test]
fn single_step_loops_are_gradient_steps() {
    let obj = LogisticF64::new(toy_classification(10, 3, 6), 0.1).unwrap();
    let w0 = DenseVector::from_vec(vec![0.2, 0.1, -0.4]);
    let expected = {
        let mut w = w0.clone();
        w.axpy(-0.7, &obj.full_gradient(&w0).unwrap()).unwrap();
        w
    };
    for method in [Method::MbSarahRbb, Method::Ms2gdRbb, Method::MbSarahFixed, Method::Svrg] {
        let rule = match method {
            Method::MbSarahRbb => StepRule::rbb_with(0.1, 3, 0.7),
            Method::Ms2gdRbb => StepRule::rbb_with(1.0, 3, 0.7),
            _ => StepRule::fixed(0.7),
        };
        let cfg = SolverConfigF64::new(method, 1, 2, 1, rule).with_w0(w0.clone());
        assert_eq!(run(&obj, &cfg).unwrap().final_w, expected, "{method}");
    }
}

fn mean_passes_to(trace_of: impl Fn(u64) -> RunTrace<f64>, p_star: f64, target: f64) -> f64 {
    let seeds = 0..5u64;
    let k = seeds.clone().count() as f64;
    seeds
        .map(|s| {
            let t = trace_of(s);
            t.records
                .iter()
                .find(|r| r.objective_value - p_star <= target)
                .map_or(f64::INFINITY, |r| r.effective_passes)
        })
        .sum::<f64>()
        / k
}

/// With matched mini-batch sizes and step scaling, the recursive estimator
/// should need no more passes than the snapshot estimator to reach 1e-6.
#[test]
#[ignore = "does not hold on the synthetic desk problem: about 19.0 vs 15.0 mean passes over 5 seeds"]
fn recursive_estimator_matches_snapshot_estimator() {
    let obj = desk_problem();
    // m = 1 with b = n is plain gradient descent
    let reference = SolverConfigF64::new(Method::MbSarahFixed, 1, 1000, 3000, StepRule::fixed(1.0 / 0.26));
    let p_star = run(&obj, &reference).unwrap().final_record().unwrap().objective_value;
    let cfg = |method| SolverConfigF64::new(method, 500, 4, 8, StepRule::rbb_with(1.0, 40, 0.1));
    let sarah = mean_passes_to(|s| run_mb_sarah_rbb(&obj, &cfg(Method::MbSarahRbb).with_seed(s)).unwrap(), p_star, 1e-6);
    let ms2gd = mean_passes_to(|s| run_ms2gd_rbb(&obj, &cfg(Method::Ms2gdRbb).with_seed(s)).unwrap(), p_star, 1e-6);
    assert!(ms2gd.is_finite() && sarah.is_finite(), "both methods should converge");
    assert!(sarah <= ms2gd, "recursive {sarah} passes vs snapshot {ms2gd}");
}
