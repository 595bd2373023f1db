use std::fmt;
use std::str::FromStr;

use super::SolverError;
use crate::linalg::DenseVector;
use crate::scalar::Real;
use crate::stepsize::StepRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Recursive estimator with per-iteration scaled RBB steps.
    MbSarahRbb,
    /// Recursive estimator with a constant step.
    MbSarahFixed,
    /// Snapshot estimator with unscaled RBB steps (`γ = 1`).
    Ms2gdRbb,
    /// Snapshot estimator with a constant step.
    Ms2gdFixed,
    /// Snapshot estimator, constant step; usually run with `b = 1`.
    Svrg,
    /// Snapshot estimator with one BB step per outer loop.
    SvrgBb,
    /// Plain mini-batch SGD; an outer loop is `m` steps.
    Sgd,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Self::MbSarahRbb,
        Self::MbSarahFixed,
        Self::Ms2gdRbb,
        Self::Ms2gdFixed,
        Self::Svrg,
        Self::SvrgBb,
        Self::Sgd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::MbSarahRbb => "mb_sarah_rbb",
            Self::MbSarahFixed => "mb_sarah_fixed",
            Self::Ms2gdRbb => "ms2gd_rbb",
            Self::Ms2gdFixed => "ms2gd_fixed",
            Self::Svrg => "svrg",
            Self::SvrgBb => "svrg_bb",
            Self::Sgd => "sgd",
        }
    }

    /// Whether the inner loop uses the recursive estimator.
    pub fn is_recursive(self) -> bool {
        matches!(self, Self::MbSarahRbb | Self::MbSarahFixed)
    }

    fn accepts(self, rule: &StepRule<impl Real>) -> bool {
        use StepRule as R;
        match self {
            Self::MbSarahRbb => matches!(rule, R::Rbb { .. } | R::Fixed { .. }),
            Self::Ms2gdRbb => match rule {
                R::Rbb { gamma, .. } => gamma.is_one(),
                R::Fixed { .. } => true,
                _ => false,
            },
            Self::MbSarahFixed | Self::Ms2gdFixed | Self::Svrg => matches!(rule, R::Fixed { .. }),
            Self::SvrgBb => matches!(rule, R::EpochBb { .. }),
            Self::Sgd => matches!(rule, R::Fixed { .. } | R::InverseTime { .. }),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|m| m.name() == norm)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|m| m.name()).collect();
                format!("unknown method {s:?}; expected one of {}", names.join(", "))
            })
    }
}

/// Everything a run needs besides the objective.
///
/// The step-size batch size `b_H` lives in [`StepRule::Rbb`]; methods
/// without an RBB rule have none.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    pub method: Method,
    /// Inner-loop length.
    pub m: usize,
    /// Gradient mini-batch size.
    pub b: usize,
    /// Number of outer loops.
    pub outer_count: usize,
    pub step_rule: StepRule<T>,
    pub seed: u64,
    /// Starting point; zero when `None`.
    pub w0: Option<DenseVector<T>>,
    /// Record every inner iteration (costs extra uncounted full gradients).
    pub dense_trace: bool,
}

impl<T: Real> SolverConfig<T> {
    pub fn new(method: Method, m: usize, b: usize, outer_count: usize, step_rule: StepRule<T>) -> Self {
        Self {
            method,
            m,
            b,
            outer_count,
            step_rule,
            seed: 0,
            w0: None,
            dense_trace: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_w0(mut self, w0: DenseVector<T>) -> Self {
        self.w0 = Some(w0);
        self
    }

    pub fn with_dense_trace(mut self, on: bool) -> Self {
        self.dense_trace = on;
        self
    }

    pub fn b_h(&self) -> Option<usize> {
        self.step_rule.b_h()
    }

    pub fn validate(&self, n: usize, dim: usize) -> Result<(), SolverError<T>> {
        let bad = |msg: String| Err(SolverError::InvalidConfig(msg));
        if self.m == 0 {
            return bad("m must be at least 1".into());
        }
        if self.outer_count == 0 {
            return bad("outer_count must be at least 1".into());
        }
        if self.b == 0 || self.b > n {
            return bad(format!("b = {} must lie in 1..={n}", self.b));
        }
        if let Some(b_h) = self.b_h() {
            if b_h > n {
                return bad(format!("b_H = {b_h} must lie in 1..={n}"));
            }
        }
        self.step_rule.validate()?;
        if !self.method.accepts(&self.step_rule) {
            return bad(format!("method {} cannot use step rule {:?}", self.method, self.step_rule));
        }
        if let Some(w0) = &self.w0 {
            if w0.len() != dim {
                return bad(format!("w0 has dimension {}, objective has {dim}", w0.len()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("MB-SARAH-RBB".parse::<Method>().unwrap(), Method::MbSarahRbb);
        assert!("sag".parse::<Method>().is_err());
    }

    #[test]
    fn validation() {
        let ok = SolverConfig::new(Method::MbSarahRbb, 10, 2, 1, StepRule::<f64>::rbb(4));
        assert!(ok.validate(10, 3).is_ok());
        assert!(ok.validate(3, 3).is_err()); // b_H > n
        let mut c = ok.clone();
        c.b = 11;
        assert!(c.validate(10, 3).is_err());
        c = ok.clone();
        c.m = 0;
        assert!(c.validate(10, 3).is_err());
        c = ok.clone();
        c.outer_count = 0;
        assert!(c.validate(10, 3).is_err());
        assert!(ok.clone().with_w0(DenseVector::zeros(2)).validate(10, 3).is_err());

        let fixed_sarah_with_rbb = SolverConfig::new(Method::MbSarahFixed, 5, 1, 1, StepRule::<f64>::rbb(4));
        assert!(fixed_sarah_with_rbb.validate(10, 3).is_err());
        let ms2gd_scaled = SolverConfig::new(Method::Ms2gdRbb, 5, 1, 1, StepRule::rbb_with(0.1f64, 4, 0.1));
        assert!(ms2gd_scaled.validate(10, 3).is_err());
        let ms2gd = SolverConfig::new(Method::Ms2gdRbb, 5, 1, 1, StepRule::rbb_with(1.0f64, 4, 0.1));
        assert!(ms2gd.validate(10, 3).is_ok());
        let svrg_bb = SolverConfig::new(Method::SvrgBb, 5, 1, 1, StepRule::epoch_bb(0.1f64));
        assert!(svrg_bb.validate(10, 3).is_ok());
        let sgd = SolverConfig::new(Method::Sgd, 5, 1, 1, StepRule::InverseTime { eta_0: 0.1f64, decay: 0.01 });
        assert!(sgd.validate(10, 3).is_ok());
    }
}
