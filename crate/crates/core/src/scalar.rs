//! Scalar abstractions.
//!
//! The optimization code is written against [`Real`] so it can run in `f64`
//! (the default used by the harness) or `f32`. The closed-form theory
//! formulas only need field arithmetic and are written against [`Field`],
//! which rational types such as `num_rational::BigRational` also satisfy.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, Num, NumAssign, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only if the literal is not representable,
    /// which cannot happen for the finite constants used in this crate.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable as float")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Ordered field used for exact evaluation of rational formulas.
pub trait Field: Num + FromPrimitive + PartialOrd + Clone + Debug {
    fn of_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in field")
    }
}

impl<T> Field for T where T: Num + FromPrimitive + PartialOrd + Clone + Debug {}
