//! Coordinate types for tree layouts.

use std::fmt::Debug;

use num_rational::{BigRational, Ratio};
use num_traits::{Num, ToPrimitive};

/// A number layouts can compute with: floats, or exact rationals when
/// tiling has to be checked without rounding.
pub trait Scalar: Num + Clone + PartialOrd + Debug {
    fn from_count(n: u64) -> Self;

    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn from_count(n: u64) -> Self {
        n as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    fn from_count(n: u64) -> Self {
        n as f32
    }

    fn to_f64(&self) -> f64 {
        f64::from(*self)
    }
}

impl Scalar for Ratio<i64> {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(i64::try_from(n).expect("count fits in i64"))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

impl Scalar for BigRational {
    fn from_count(n: u64) -> Self {
        BigRational::from_integer(n.into())
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}
