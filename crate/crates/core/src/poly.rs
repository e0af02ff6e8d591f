//! Dense univariate polynomials over a [`Scalar`] field.
//!
//! Coefficients are stored in ascending order (`coeffs[i]` multiplies `x^i`)
//! and kept normalized: no trailing zeros, so the zero polynomial has an empty
//! coefficient vector.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::scalar::Scalar;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UPoly<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> UPoly<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        UPoly { coeffs }
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    /// The polynomial `x`.
    pub fn identity() -> Self {
        Self::new(vec![T::zero(), T::one()])
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&T> {
        self.coeffs.last()
    }

    pub fn coeff(&self, i: usize) -> T {
        self.coeffs.get(i).cloned().unwrap_or_else(T::zero)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    /// Constant term if the polynomial has degree 0 (or is zero).
    pub fn as_constant(&self) -> Option<T> {
        if self.is_constant() {
            Some(self.coeff(0))
        } else {
            None
        }
    }

    /// Horner evaluation.
    pub fn eval(&self, x: &T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c.clone() * T::from_usize(i).expect("degree fits"))
            .collect();
        Self::new(coeffs)
    }

    pub fn nth_derivative(&self, n: u32) -> Self {
        (0..n).fold(self.clone(), |p, _| p.derivative())
    }

    /// Antiderivative whose value at 0 equals `init`.
    pub fn integrate(&self, init: T) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(init);
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c.clone() / T::from_usize(i + 1).expect("degree fits"));
        }
        Self::new(coeffs)
    }

    /// `p(x + shift)`, used to move a polynomial between local time origins.
    pub fn shift(&self, shift: &T) -> Self {
        let mut acc = Self::zero();
        let base = Self::new(vec![shift.clone(), T::one()]);
        for c in self.coeffs.iter().rev() {
            acc = acc * base.clone() + Self::constant(c.clone());
        }
        acc
    }

    pub fn scale(&self, k: &T) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.clone() * k.clone()).collect())
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        let d_deg = divisor.degree().expect("division by zero polynomial");
        let lead = divisor.leading().unwrap().clone();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![T::zero(); self.coeffs.len().saturating_sub(d_deg)];
        while rem.len() > d_deg && !rem.is_empty() {
            let shift = rem.len() - 1 - d_deg;
            let factor = rem.last().unwrap().clone() / lead.clone();
            for (i, c) in divisor.coeffs.iter().enumerate() {
                let v = rem[shift + i].clone() - factor.clone() * c.clone();
                rem[shift + i] = v;
            }
            quot[shift] = factor;
            rem.pop();
            while rem.last().is_some_and(|c| c.is_zero()) {
                rem.pop();
            }
        }
        (Self::new(quot), Self::new(rem))
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &Self) -> Self {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn monic(&self) -> Self {
        match self.leading() {
            Some(l) => self.scale(&(T::one() / l.clone())),
            None => self.clone(),
        }
    }

    /// Polynomial with the same roots, each of multiplicity one.
    pub fn square_free(&self) -> Self {
        if self.degree().unwrap_or(0) == 0 {
            return self.clone();
        }
        let g = self.gcd(&self.derivative());
        self.div_rem(&g).0
    }
}

impl<T: Scalar> Zero for UPoly<T> {
    fn zero() -> Self {
        UPoly { coeffs: Vec::new() }
    }

    fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}

impl<T: Scalar> One for UPoly<T> {
    fn one() -> Self {
        Self::constant(T::one())
    }
}

impl<T: Scalar> Add for UPoly<T> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Self::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl<T: Scalar> Sub for UPoly<T> {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<T: Scalar> Neg for UPoly<T> {
    type Output = Self;

    fn neg(self) -> Self {
        Self::new(self.coeffs.into_iter().map(|c| -c).collect())
    }
}

impl<T: Scalar> Mul for UPoly<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::zero();
        }
        let mut out = vec![T::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self::new(out)
    }
}

impl<T: Scalar> fmt::Display for UPoly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})t")?,
                _ => write!(f, "({c})t^{i}")?,
            }
        }
        Ok(())
    }
}

impl<T: Scalar> fmt::Debug for UPoly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UPoly[{self}]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    fn qp(cs: &[(i64, i64)]) -> UPoly<BigRational> {
        UPoly::new(cs.iter().map(|&(n, d)| q(n, d)).collect())
    }

    #[test]
    fn falling_ball_by_double_integration() {
        let acc = UPoly::constant(q(-49, 5));
        let vel = acc.integrate(q(0, 1));
        assert_eq!(vel, qp(&[(0, 1), (-49, 5)]));
        let pos = vel.integrate(q(10, 1));
        assert_eq!(pos, qp(&[(10, 1), (0, 1), (-49, 10)]));
        assert_eq!(pos.eval(&q(1, 1)), q(51, 10));
        assert_eq!(pos.eval(&q(10, 7)), q(0, 1));
        assert_eq!(vel.eval(&q(10, 7)), q(-14, 1));
    }

    #[test]
    fn integrate_trivial_cases() {
        let zero: UPoly<BigRational> = UPoly::zero();
        assert_eq!(zero.integrate(q(3, 1)), UPoly::constant(q(3, 1)));
        assert_eq!(UPoly::constant(q(1, 1)).integrate(q(0, 1)), UPoly::identity());
    }

    #[test]
    fn shift_moves_origin() {
        let p = qp(&[(10, 1), (0, 1), (-49, 10)]);
        let s = p.shift(&q(10, 7));
        for t in [q(0, 1), q(1, 3), q(2, 1)] {
            assert_eq!(s.eval(&t), p.eval(&(t.clone() + q(10, 7))));
        }
    }

    #[test]
    fn square_free_removes_multiplicity() {
        // (x-1)^2 (x+2)
        let p = qp(&[(-1, 1), (1, 1)]) * qp(&[(-1, 1), (1, 1)]) * qp(&[(2, 1), (1, 1)]);
        let s = p.square_free().monic();
        assert_eq!(s, (qp(&[(-1, 1), (1, 1)]) * qp(&[(2, 1), (1, 1)])).monic());
    }

    #[test]
    fn works_over_floats() {
        let p: UPoly<f64> = UPoly::new(vec![10.0, 0.0, -4.9]);
        assert!((p.eval(&1.0) - 5.1).abs() < 1e-12);
        assert_eq!(p.derivative().coeffs(), &[0.0, -9.8]);
    }

    proptest::proptest! {
        #[test]
        fn derivative_inverts_integration(cs in proptest::collection::vec((-50i64..50, 1i64..20), 0..7), c0 in -20i64..20) {
            let p = qp(&cs);
            let back = p.integrate(q(c0, 1)).derivative();
            proptest::prop_assert_eq!(back, p);
        }
    }
}
