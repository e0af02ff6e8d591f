//! Scalar abstraction shared by the polynomial and root-finding code.
//!
//! Everything semantic in this crate runs on exact rationals, but the
//! polynomial kernels only need field operations and an order, so they are
//! written against [`Scalar`] and also work for `f32`/`f64` (useful for quick
//! plotting or cross-checks).

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, Zero};

/// Ordered field used for polynomial coefficients and evaluation points.
pub trait Scalar: Clone + Debug + Display + PartialOrd + Num + Signed + FromPrimitive {
    /// `true` when arithmetic never rounds.
    const EXACT: bool;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num).expect("i64 fits") / Self::from_i64(den).expect("i64 fits")
    }

    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn midpoint(a: &Self, b: &Self) -> Self {
        (a.clone() + b.clone()) / Self::two()
    }

    /// Lossy conversion used for CSV rendering and diagnostics.
    fn to_f64_lossy(&self) -> f64;
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64_lossy(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn to_f64_lossy(&self) -> f64 {
        *self as f64
    }
}

/// Simplest rational (smallest denominator, then smallest numerator magnitude)
/// in the half-open interval `(lo, hi]`.
///
/// Computed by walking the Stern-Brocot tree via continued fractions.
pub fn simplest_rational_in(lo: &BigRational, hi: &BigRational) -> BigRational {
    assert!(lo < hi, "empty interval");
    if lo.is_negative() || lo.is_zero() {
        if hi.is_positive() {
            return BigRational::zero();
        }
        // both non-positive: mirror into [-hi, -lo)
        return -simplest_in_closed_open(&-hi.clone(), &-lo.clone());
    }
    simplest_open_closed(lo, hi)
}

// (lo, hi] with 0 < lo < hi
fn simplest_open_closed(lo: &BigRational, hi: &BigRational) -> BigRational {
    let fl = lo.floor();
    let candidate = &fl + BigRational::one();
    if candidate <= *hi {
        return candidate;
    }
    // lo and hi share the integer part fl; recurse on reciprocals
    let a = lo - &fl;
    let b = hi - &fl;
    if a.is_zero() {
        // x in (0, b]: the smallest unit fraction not exceeding b
        return fl + b.recip().ceil().recip();
    }
    // x in (a, b]  <=>  1/x in [1/b, 1/a)
    let inner = simplest_in_closed_open(&b.recip(), &a.recip());
    fl + inner.recip()
}

// [lo, hi) with 0 <= lo < hi
fn simplest_in_closed_open(lo: &BigRational, hi: &BigRational) -> BigRational {
    if lo.is_integer() {
        return lo.clone();
    }
    let cl = lo.ceil();
    if cl < *hi {
        return cl;
    }
    let fl = lo.floor();
    let a = lo - &fl;
    let b = hi - &fl;
    // x in [a, b)  <=>  1/x in (1/b, 1/a]
    let inner = simplest_open_closed(&b.recip(), &a.recip());
    fl + inner.recip()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    #[test]
    fn simplest_picks_smallest_denominator() {
        assert_eq!(simplest_rational_in(&q(1, 3), &q(1, 2)), q(1, 2));
        assert_eq!(simplest_rational_in(&q(13, 10), &q(14, 10)), q(4, 3));
        assert_eq!(simplest_rational_in(&q(-1, 2), &q(1, 2)), q(0, 1));
        assert_eq!(simplest_rational_in(&q(9, 7), &q(10, 7)), q(4, 3));
        assert_eq!(simplest_rational_in(&q(4, 3), &q(10, 7)), q(7, 5));
        assert_eq!(simplest_rational_in(&q(-3, 2), &q(-4, 3)), q(-4, 3));
    }

    #[test]
    fn simplest_brute_force_agreement() {
        // enumerate rationals by denominator to find the first one inside
        for (ln, ld, hn, hd) in [(1, 7, 2, 9), (5, 11, 6, 11), (355, 113, 22, 7), (1, 100, 1, 99)] {
            let lo = q(ln, ld);
            let hi = q(hn, hd);
            let mut expected = None;
            'outer: for den in 1..500i64 {
                for num in -2000..2000i64 {
                    let c = q(num, den);
                    if c > lo && c <= hi {
                        expected = Some(c);
                        break 'outer;
                    }
                }
            }
            assert_eq!(Some(simplest_rational_in(&lo, &hi)), expected, "({lo}, {hi}]");
        }
    }
}
