//! Convergence conditions, rates, and complexity estimates as checkable
//! predicates.
//!
//! The one-loop condition and the rate are rational in their inputs and are
//! evaluated over any [`Field`], so `BigRational` gives exact answers. The
//! complexity estimates need `ceil` and `ln` and are evaluated in [`Real`].
//! They are order-level estimates with the constants written out, not
//! guarantees.

use std::fmt;

use thiserror::Error;

use crate::scalar::{Field, Real};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TheoryError {
    #[error("the one-loop condition needs n >= 2, got n = {0}")]
    TooFewSamples(usize),
    #[error("invalid theory input: {0}")]
    InvalidInput(String),
    #[error("multi-loop complexity needs 0 < epsilon < 1")]
    EpsilonNotBelowOne,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryInputs<F> {
    /// Smoothness constant.
    pub l: F,
    /// Strong convexity constant.
    pub mu: F,
    pub n: usize,
    pub b: usize,
    pub b_h: usize,
    pub gamma: F,
    /// Inner-loop length.
    pub m: usize,
    /// Target accuracy in units of `‖∇P‖²`.
    pub epsilon: F,
}

impl<F: Field> TheoryInputs<F> {
    /// Checks `L >= mu > 0`, `1 <= b <= n`, `b_H >= 1`, `gamma > 0`,
    /// `m >= 1`, `epsilon > 0`.
    pub fn validate(&self) -> Result<(), TheoryError> {
        let zero = F::zero();
        let bad = |s: &str| Err(TheoryError::InvalidInput(s.to_string()));
        if !(self.mu > zero) {
            return bad("mu must be positive");
        }
        if self.l < self.mu {
            return bad("L must be at least mu");
        }
        if self.b == 0 || self.b > self.n {
            return bad("b must lie in 1..=n");
        }
        if self.b_h == 0 {
            return bad("b_H must be at least 1");
        }
        if !(self.gamma > zero) {
            return bad("gamma must be positive");
        }
        if self.m == 0 {
            return bad("m must be at least 1");
        }
        if !(self.epsilon > zero) {
            return bad("epsilon must be positive");
        }
        Ok(())
    }
}

/// Left-hand side of the one-loop condition
/// `(L²γ² / (μ² b b_H²)) · ((n-b)/(n-1)) · m - (1 - Lγ/(μ b_H))`
/// and whether it is `<= 0`.
pub fn check_condition_13<F: Field>(t: &TheoryInputs<F>) -> Result<(F, bool), TheoryError> {
    if t.n < 2 {
        return Err(TheoryError::TooFewSamples(t.n));
    }
    if !(t.mu > F::zero()) || t.b == 0 || t.b_h == 0 {
        return Err(TheoryError::InvalidInput("mu, b and b_H must be positive".into()));
    }
    let lhs = condition_lhs(&t.l, &t.mu, t.n, t.b, t.b_h, &t.gamma, t.m);
    let holds = lhs <= F::zero();
    Ok((lhs, holds))
}

fn condition_lhs<F: Field>(l: &F, mu: &F, n: usize, b: usize, b_h: usize, gamma: &F, m: usize) -> F {
    let bh = F::of_count(b_h);
    let lg = l.clone() * gamma.clone();
    let mu_bh = mu.clone() * bh.clone();
    let variance = lg.clone() * lg.clone() / (mu.clone() * mu.clone() * F::of_count(b) * bh.clone() * bh)
        * (F::of_count(n - b) / F::of_count(n - 1))
        * F::of_count(m);
    variance - (F::one() - lg / mu_bh)
}

/// `ρ_m = b_H / (γ (m + 1))`. Only a contraction when below one.
pub fn rho_m<F: Field>(t: &TheoryInputs<F>) -> F {
    F::of_count(t.b_h) / (t.gamma.clone() * F::of_count(t.m + 1))
}

/// Largest `γ` (to bisection precision) for which the condition holds with
/// the given `m`. The returned value always satisfies the condition.
///
/// The left-hand side is `-1` at `γ = 0` and increasing in `γ`, and it is
/// positive at `γ = μ b_H / L` whenever `b < n`, so the search runs on
/// `[0, μ b_H / L]`.
pub fn feasible_gamma<F: Field>(
    l: &F,
    mu: &F,
    n: usize,
    b: usize,
    b_h: usize,
    m: usize,
    iterations: usize,
) -> Result<F, TheoryError> {
    if n < 2 {
        return Err(TheoryError::TooFewSamples(n));
    }
    if !(mu.clone() > F::zero()) || !(l.clone() > F::zero()) || b == 0 || b > n || b_h == 0 {
        return Err(TheoryError::InvalidInput(
            "need L, mu > 0, 1 <= b <= n and b_H >= 1".into(),
        ));
    }
    let two = F::one() + F::one();
    let mut lo = F::zero();
    let mut hi = mu.clone() * F::of_count(b_h) / l.clone();
    if condition_lhs(l, mu, n, b, b_h, &hi, m) <= F::zero() {
        return Ok(hi);
    }
    for _ in 0..iterations {
        let mid = (lo.clone() + hi.clone()) / two.clone();
        if condition_lhs(l, mu, n, b, b_h, &mid, m) <= F::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo == F::zero() {
        // not enough iterations to leave zero; hi/2^k is still feasible eventually
        return Err(TheoryError::InvalidInput("bisection did not find a positive witness".into()));
    }
    Ok(lo)
}

/// Single-loop cost `n + 2m` with `m = ceil(μ b_H / (γ ε))`, or
/// `m = ceil(2 μ b_H gap / (γ ε))` when the initial suboptimality gap is known.
pub fn complexity_single_loop<T: Real>(t: &TheoryInputs<T>, gap: Option<T>) -> T {
    let bh = T::from_count(t.b_h);
    let core = t.mu * bh / (t.gamma * t.epsilon);
    let m = match gap {
        Some(g) => (T::lit(2.0) * core * g).ceil(),
        None => core.ceil(),
    };
    T::from_count(t.n) + T::lit(2.0) * m
}

/// Multi-loop cost `(n + μ b_H / (γ ε)) · ln(1/ε)`.
pub fn complexity_multi_loop<T: Real>(t: &TheoryInputs<T>) -> Result<T, TheoryError> {
    if !(t.epsilon > T::zero() && t.epsilon < T::one()) {
        return Err(TheoryError::EpsilonNotBelowOne);
    }
    let bh = T::from_count(t.b_h);
    Ok((T::from_count(t.n) + t.mu * bh / (t.gamma * t.epsilon)) * t.epsilon.recip().ln())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryReport {
    pub inputs: TheoryInputs<f64>,
    pub condition_13_lhs: f64,
    pub condition_13_holds: bool,
    pub rho_m: f64,
    pub linear_rate_valid: bool,
    pub single_loop_complexity: f64,
    /// `None` when `epsilon >= 1`.
    pub multi_loop_complexity: Option<f64>,
    /// Informational only; no formula depends on it.
    pub gamma_exceeds_epsilon: bool,
}

impl TheoryReport {
    pub fn evaluate(inputs: TheoryInputs<f64>, gap: Option<f64>) -> Result<Self, TheoryError> {
        inputs.validate()?;
        let (lhs, holds) = check_condition_13(&inputs)?;
        let rho = rho_m(&inputs);
        Ok(Self {
            condition_13_lhs: lhs,
            condition_13_holds: holds,
            rho_m: rho,
            linear_rate_valid: rho < 1.0,
            single_loop_complexity: complexity_single_loop(&inputs, gap),
            multi_loop_complexity: complexity_multi_loop(&inputs).ok(),
            gamma_exceeds_epsilon: inputs.gamma > inputs.epsilon,
            inputs,
        })
    }

    /// `(key, value)` pairs in output order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let t = &self.inputs;
        vec![
            ("L", t.l.to_string()),
            ("mu", t.mu.to_string()),
            ("n", t.n.to_string()),
            ("b", t.b.to_string()),
            ("b_H", t.b_h.to_string()),
            ("gamma", t.gamma.to_string()),
            ("m", t.m.to_string()),
            ("epsilon", t.epsilon.to_string()),
            ("condition_13_lhs", self.condition_13_lhs.to_string()),
            ("condition_13_holds", self.condition_13_holds.to_string()),
            ("rho_m", self.rho_m.to_string()),
            ("linear_rate_valid", self.linear_rate_valid.to_string()),
            ("single_loop_complexity", self.single_loop_complexity.to_string()),
            (
                "multi_loop_complexity",
                self.multi_loop_complexity
                    .map_or_else(|| "undefined".to_string(), |v| v.to_string()),
            ),
            ("gamma_exceeds_epsilon", self.gamma_exceeds_epsilon.to_string()),
        ]
    }
}

/// One `key = value` line per entry.
impl fmt::Display for TheoryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.entries() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}
