//! Step-size rules.
//!
//! * [`StepRule::Fixed`]: constant step.
//! * [`StepRule::Rbb`]: random Barzilai-Borwein step, recomputed every inner
//!   iteration from a fresh sub-sample `S_H` and scaled by `γ / b_H`:
//!   `η'_k = (γ/b_H) ‖Δw‖² / (Δwᵀ Δg)`, where both gradients in `Δg` are
//!   sub-sample means over the same `S_H`.
//! * [`StepRule::EpochBb`]: classic BB step recomputed once per outer loop from
//!   consecutive snapshots and their full gradients, divided by `m`.
//! * [`StepRule::InverseTime`]: `η_0 / (1 + decay·t)`, for the SGD baseline.
//!
//! Finite precision can make the curvature denominator tiny or negative even
//! on strongly convex problems. In that case the rule falls back to the last
//! accepted step and reports it; accepted steps are clamped into
//! `[eta_min, eta_max]`.

use thiserror::Error;

use crate::linalg::DenseVector;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("iterate did not move; the curvature ratio is undefined")]
    DegenerateStep,
    #[error("strong convexity constant must be positive, got {0}")]
    NonPositiveMu(String),
    #[error("invalid step rule: {0}")]
    InvalidRule(String),
    #[error("dimension mismatch between step inputs")]
    DimensionMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafeguardPolicy<T> {
    /// Fallback is taken when `Δwᵀ Δg < eps_denominator · ‖Δw‖²`.
    pub eps_denominator: T,
    pub eta_max: T,
    pub eta_min: T,
}

impl<T: Real> Default for SafeguardPolicy<T> {
    fn default() -> Self {
        Self {
            eps_denominator: T::lit(1e-12),
            eta_max: T::lit(1e3),
            eta_min: T::lit(1e-12),
        }
    }
}

impl<T: Real> SafeguardPolicy<T> {
    pub fn validate(&self) -> Result<(), StepError> {
        let ok = self.eps_denominator > T::zero()
            && self.eta_min > T::zero()
            && self.eta_min <= self.eta_max
            && self.eta_max.is_finite();
        if ok {
            Ok(())
        } else {
            Err(StepError::InvalidRule(format!(
                "safeguard needs eps > 0 and 0 < eta_min <= eta_max < inf, got {self:?}"
            )))
        }
    }
}

pub const DEFAULT_ETA0: f64 = 0.1;

/// `γ = 0.1` for small step-size batches (`b_H < 50`), `1` otherwise.
pub fn default_gamma<T: Real>(b_h: usize) -> T {
    if b_h < 50 {
        T::lit(0.1)
    } else {
        T::one()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepRule<T> {
    Fixed {
        eta: T,
    },
    Rbb {
        gamma: T,
        b_h: usize,
        eta_0: T,
        safeguard: SafeguardPolicy<T>,
    },
    EpochBb {
        eta_0: T,
        safeguard: SafeguardPolicy<T>,
    },
    InverseTime {
        eta_0: T,
        decay: T,
    },
}

impl<T: Real> StepRule<T> {
    pub fn fixed(eta: T) -> Self {
        Self::Fixed { eta }
    }

    /// RBB rule with the default `γ` for `b_h` and `η_0 = 0.1`.
    pub fn rbb(b_h: usize) -> Self {
        Self::Rbb {
            gamma: default_gamma(b_h),
            b_h,
            eta_0: T::lit(DEFAULT_ETA0),
            safeguard: SafeguardPolicy::default(),
        }
    }

    pub fn rbb_with(gamma: T, b_h: usize, eta_0: T) -> Self {
        Self::Rbb {
            gamma,
            b_h,
            eta_0,
            safeguard: SafeguardPolicy::default(),
        }
    }

    pub fn epoch_bb(eta_0: T) -> Self {
        Self::EpochBb {
            eta_0,
            safeguard: SafeguardPolicy::default(),
        }
    }

    /// Step used before any curvature information exists.
    pub fn initial_step(&self) -> T {
        match *self {
            Self::Fixed { eta } => eta,
            Self::Rbb { eta_0, .. } | Self::EpochBb { eta_0, .. } | Self::InverseTime { eta_0, .. } => eta_0,
        }
    }

    pub fn b_h(&self) -> Option<usize> {
        match *self {
            Self::Rbb { b_h, .. } => Some(b_h),
            _ => None,
        }
    }

    pub fn gamma(&self) -> Option<T> {
        match *self {
            Self::Rbb { gamma, .. } => Some(gamma),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), StepError> {
        let positive = |name: &str, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(StepError::InvalidRule(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match *self {
            Self::Fixed { eta } => positive("eta", eta),
            Self::Rbb {
                gamma,
                b_h,
                eta_0,
                safeguard,
            } => {
                positive("gamma", gamma)?;
                positive("eta_0", eta_0)?;
                if b_h == 0 {
                    return Err(StepError::InvalidRule("b_H must be at least 1".into()));
                }
                safeguard.validate()
            }
            Self::EpochBb { eta_0, safeguard } => {
                positive("eta_0", eta_0)?;
                safeguard.validate()
            }
            Self::InverseTime { eta_0, decay } => {
                positive("eta_0", eta_0)?;
                if decay >= T::zero() && decay.is_finite() {
                    Ok(())
                } else {
                    Err(StepError::InvalidRule(format!("decay must be >= 0, got {decay}")))
                }
            }
        }
    }
}

/// Result of a curvature-based step computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome<T> {
    /// Step to use.
    pub eta: T,
    /// Unclamped ratio, `None` when the fallback was taken.
    pub raw: Option<T>,
    pub fallback: bool,
    /// Sampled curvature `Δwᵀ Δg / ‖Δw‖²`.
    pub curvature: T,
}

fn scaled_bb_ratio<T: Real>(
    w_k: &DenseVector<T>,
    w_prev: &DenseVector<T>,
    g_k: &DenseVector<T>,
    g_prev: &DenseVector<T>,
    scale: T,
    policy: &SafeguardPolicy<T>,
    previous: T,
) -> Result<StepOutcome<T>, StepError> {
    let d = w_k.len();
    if w_prev.len() != d || g_k.len() != d || g_prev.len() != d {
        return Err(StepError::DimensionMismatch);
    }
    let mut s = T::zero();
    let mut y = T::zero();
    for j in 0..d {
        let dw = w_k[j] - w_prev[j];
        let dg = g_k[j] - g_prev[j];
        s += dw * dw;
        y += dw * dg;
    }
    if s == T::zero() {
        return Err(StepError::DegenerateStep);
    }
    let curvature = y / s;
    let raw = scale * (s / y);
    // negated comparison so NaN also falls back
    if !(y >= policy.eps_denominator * s) || !raw.is_finite() {
        return Ok(StepOutcome {
            eta: previous,
            raw: None,
            fallback: true,
            curvature,
        });
    }
    Ok(StepOutcome {
        eta: raw.max(policy.eta_min).min(policy.eta_max),
        raw: Some(raw),
        fallback: false,
        curvature,
    })
}

/// Scaled random BB step `η'_k = (γ/b_H) ‖Δw‖² / (Δwᵀ Δg)`.
///
/// `g_k` and `g_prev` must be mean gradients over the same sub-sample of
/// size `b_h`, evaluated at `w_k` and `w_prev`. `previous` is the last
/// accepted step, returned when the safeguard rejects the ratio.
#[allow(clippy::too_many_arguments)]
pub fn rbb_step<T: Real>(
    w_k: &DenseVector<T>,
    w_prev: &DenseVector<T>,
    g_k: &DenseVector<T>,
    g_prev: &DenseVector<T>,
    b_h: usize,
    gamma: T,
    policy: &SafeguardPolicy<T>,
    previous: T,
) -> Result<StepOutcome<T>, StepError> {
    scaled_bb_ratio(w_k, w_prev, g_k, g_prev, gamma / T::from_count(b_h), policy, previous)
}

/// `γ / (μ b_H)`: no RBB step can exceed this when every component is
/// `μ`-strongly convex.
pub fn upper_bound<T: Real>(mu: T, gamma: T, b_h: usize) -> Result<T, StepError> {
    if !(mu > T::zero()) {
        return Err(StepError::NonPositiveMu(mu.to_string()));
    }
    Ok(gamma / (mu * T::from_count(b_h)))
}

/// Per-epoch BB step `(1/m) ‖Δw̃‖² / (Δw̃ᵀ Δg̃)` from consecutive snapshots
/// and their full gradients.
pub fn epoch_bb_step<T: Real>(
    snapshot_k: &DenseVector<T>,
    snapshot_prev: &DenseVector<T>,
    fullgrad_k: &DenseVector<T>,
    fullgrad_prev: &DenseVector<T>,
    m: usize,
    policy: &SafeguardPolicy<T>,
    previous: T,
) -> Result<StepOutcome<T>, StepError> {
    scaled_bb_ratio(
        snapshot_k,
        snapshot_prev,
        fullgrad_k,
        fullgrad_prev,
        T::one() / T::from_count(m),
        policy,
        previous,
    )
}
