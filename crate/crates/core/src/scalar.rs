//! Numeric abstraction shared by the coordination arithmetic and the
//! feasibility routine.
//!
//! Floating-point scalars carry a comparison tolerance; exact rationals use a
//! tolerance of zero, so every sign test on them is decided exactly.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// Field-like scalar usable by the multiplier arithmetic and the simplex.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive
{
    /// Absolute tolerance for sign decisions. Zero for exact types.
    fn tolerance() -> Self;

    /// Lossless (for rationals) or identity (for floats) conversion.
    fn from_f64_exact(value: f64) -> Option<Self>;

    fn is_exact() -> bool {
        false
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }

    fn is_negative_tol(&self) -> bool {
        *self < -Self::tolerance()
    }

    fn is_positive_tol(&self) -> bool {
        *self > Self::tolerance()
    }

    fn is_zero_tol(&self) -> bool {
        !self.is_negative_tol() && !self.is_positive_tol()
    }
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-9
    }

    fn from_f64_exact(value: f64) -> Option<Self> {
        value.is_finite().then_some(value)
    }
}

impl Scalar for f32 {
    fn tolerance() -> Self {
        1e-5
    }

    fn from_f64_exact(value: f64) -> Option<Self> {
        value.is_finite().then_some(value as f32)
    }
}

impl Scalar for BigRational {
    fn tolerance() -> Self {
        BigRational::from_integer(BigInt::from(0))
    }

    fn from_f64_exact(value: f64) -> Option<Self> {
        BigRational::from_float(value)
    }

    fn is_exact() -> bool {
        true
    }
}
