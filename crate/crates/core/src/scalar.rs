//! Coefficient fields.
//!
//! Everything above this module is written against [`Scalar`]; the exact
//! rationals are the field all verification runs in, `f64` is accepted for
//! quick numerical experiments.

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One};

/// A coefficient field.
pub trait Scalar:
    Num
    + Neg<Output = Self>
    + Clone
    + PartialEq
    + FromPrimitive
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    fn from_int(v: i64) -> Self {
        Self::from_i64(v).expect("integer is representable in every coefficient field")
    }
}

impl<T> Scalar for T where
    T: Num
        + Neg<Output = T>
        + Clone
        + PartialEq
        + FromPrimitive
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// The exact ground field.
pub type Rational = BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    BigRational::from_integer(BigInt::from(v))
}

/// Canonical textual form `p` or `p/q` (denominator positive, reduced).
pub fn fmt_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Printers fold a leading minus sign of a coefficient into the joining operator.
pub(crate) fn prints_negative<S: Scalar>(s: &S) -> bool {
    s.to_string().starts_with('-')
}
