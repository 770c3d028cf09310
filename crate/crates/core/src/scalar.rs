//! Scalar abstraction shared by the exact (rational) and floating-point code paths.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};
use std::fmt::Debug;

/// Field-like scalar: enough arithmetic for polynomial and moment algebra.
///
/// Implemented for `f32`, `f64` and arbitrary-precision rationals, so identities
/// such as the tail moment bounds can be checked without rounding.
pub trait Scalar: Num + Signed + Clone + Debug + PartialOrd + FromPrimitive + ToPrimitive {
    fn from_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize fits scalar")
    }

    fn powu(&self, n: usize) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = acc * self.clone();
        }
        acc
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
impl Scalar for BigRational {}

/// Exact rational from a ratio of integers.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `n!` in any scalar.
pub fn factorial<S: Scalar>(n: usize) -> S {
    (1..=n).fold(S::one(), |acc, i| acc * <S as Scalar>::from_usize(i))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorials_agree_across_scalars() {
        assert_eq!(factorial::<f64>(5), 120.0);
        assert_eq!(factorial::<BigRational>(6), ratio(720, 1));
        assert_eq!(factorial::<f32>(0), 1.0);
    }

    #[test]
    fn powu_is_repeated_product() {
        assert_eq!(ratio(1, 10).powu(3), ratio(1, 1000));
        assert_eq!(2.0f64.powu(10), 1024.0);
    }
}
