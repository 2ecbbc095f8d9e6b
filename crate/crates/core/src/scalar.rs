//! Scalar abstraction shared by every module.
//!
//! All measure, transport and extension code is written against [`Scalar`],
//! so the same routines run on `f64`/`f32` for speed and on [`Rational`]
//! when a result has to be exact (brute-force oracles, oscillation witnesses).

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Num, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

pub trait Scalar:
    Num + Signed + PartialOrd + Clone + Debug + Display + Send + Sync + 'static
{
    /// `true` when arithmetic is exact; tolerances collapse to zero.
    const EXACT: bool;

    /// Nearest representable value (exact binary expansion for rationals).
    fn from_real(x: f64) -> Self;

    fn to_real(&self) -> f64;

    fn is_finite_value(&self) -> bool;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_int(num) / Self::from_int(den)
    }

    fn from_int(n: i64) -> Self;

    /// A tolerance for this scalar: `x` for floating types, zero for exact ones.
    fn tol(x: f64) -> Self {
        if Self::EXACT {
            Self::zero()
        } else {
            Self::from_real(x)
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_real(x: f64) -> Self {
        x
    }

    fn to_real(&self) -> f64 {
        *self
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }

    fn from_int(n: i64) -> Self {
        n as f64
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_real(x: f64) -> Self {
        x as f32
    }

    fn to_real(&self) -> f64 {
        *self as f64
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }

    fn from_int(n: i64) -> Self {
        n as f32
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_real(x: f64) -> Self {
        Ratio::from_float(x).unwrap_or_else(Self::zero)
    }

    fn to_real(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn is_finite_value(&self) -> bool {
        true
    }

    fn from_int(n: i64) -> Self {
        Ratio::from_integer(BigInt::from(n))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(BigInt::from(num), BigInt::from(den))
    }
}

/// Sum of a sequence of scalars.
pub fn sum<'a, S: Scalar>(xs: impl IntoIterator<Item = &'a S>) -> S {
    xs.into_iter().fold(S::zero(), |acc, x| acc + x.clone())
}

/// `|a - b| <= tol`.
pub fn approx_eq<S: Scalar>(a: &S, b: &S, tol: &S) -> bool {
    (a.clone() - b.clone()).abs() <= *tol
}

pub(crate) fn half<S: Scalar>() -> S {
    S::one() / (S::one() + S::one())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_conversions_are_exact() {
        let q = Rational::from_ratio(3, 4);
        assert_eq!(q, Rational::from_real(0.75));
        assert_eq!(q.to_real(), 0.75);
        assert_eq!(Rational::tol(1e-9), Rational::zero());
        assert_eq!(f64::tol(1e-9), 1e-9);
    }

    #[test]
    fn min_max() {
        assert_eq!(f64::max_of(1.0, 2.0), 2.0);
        assert_eq!(f64::min_of(1.0, 2.0), 1.0);
        let s: f64 = sum(&[1.0, 2.0, 3.0]);
        assert_eq!(s, 6.0);
    }
}
