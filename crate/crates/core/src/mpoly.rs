//! Sparse multivariate polynomials over trajectory symbols.
//!
//! Symbols are [`VarRef`]s (name, derivative order, left-limit flag). The
//! coefficient ring is generic: exact rationals for point problems and
//! univariate polynomials in local time for interval problems.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::syntax::{BinOp, Expr, VarRef};
use crate::{Poly, Rational};

/// Coefficient ring of an [`MPoly`].
pub trait Coef: Clone + Debug + PartialEq + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self> {
    fn from_rational(r: &Rational) -> Self;
    /// The value when the coefficient is a rational constant.
    fn to_rational(&self) -> Option<Rational>;
}

impl Coef for Rational {
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }
}

impl Coef for Poly {
    fn from_rational(r: &Rational) -> Self {
        Poly::constant(r.clone())
    }

    fn to_rational(&self) -> Option<Rational> {
        self.as_constant()
    }
}

/// Exponent vector, sorted by symbol.
pub type Monomial = BTreeMap<VarRef, u32>;

#[derive(Clone, Debug, PartialEq)]
pub struct MPoly<C> {
    terms: BTreeMap<Monomial, C>,
}

impl<C: Coef> MPoly<C> {
    pub fn zero() -> Self {
        MPoly { terms: BTreeMap::new() }
    }

    pub fn constant(c: C) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::new(), c);
        p
    }

    pub fn symbol(s: VarRef) -> Self {
        let mut m = Monomial::new();
        m.insert(s, 1);
        let mut p = Self::zero();
        p.add_term(m, C::one());
        p
    }

    fn add_term(&mut self, m: Monomial, c: C) {
        let entry = self.terms.entry(m.clone()).or_insert_with(C::zero);
        *entry = entry.clone() + c;
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, C> {
        &self.terms
    }

    /// The constant term when no symbol occurs.
    pub fn as_constant(&self) -> Option<C> {
        match self.terms.len() {
            0 => Some(C::zero()),
            1 => self.terms.get(&Monomial::new()).cloned(),
            _ => None,
        }
    }

    pub fn symbols(&self) -> BTreeSet<VarRef> {
        self.terms.keys().flat_map(|m| m.keys().cloned()).collect()
    }

    /// Replaces symbols for which `f` returns a value.
    pub fn substitute(&self, f: &impl Fn(&VarRef) -> Option<C>) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let mut coef = c.clone();
            let mut rest = Monomial::new();
            for (s, &e) in m {
                match f(s) {
                    Some(v) => {
                        for _ in 0..e {
                            coef = coef * v.clone();
                        }
                    }
                    None => {
                        rest.insert(s.clone(), e);
                    }
                }
            }
            out.add_term(rest, coef);
        }
        out
    }

    /// Renames symbols (merging terms that collide).
    pub fn map_symbols(&self, f: &impl Fn(&VarRef) -> VarRef) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let mut nm = Monomial::new();
            for (s, &e) in m {
                *nm.entry(f(s)).or_insert(0) += e;
            }
            out.add_term(nm, c.clone());
        }
        out
    }

    /// If the polynomial is `a * s + b` with `a` and `b` free of `s`, returns
    /// `(a, b)`.
    pub fn linear_in(&self, s: &VarRef) -> Option<(Self, Self)> {
        let mut a = Self::zero();
        let mut b = Self::zero();
        for (m, c) in &self.terms {
            match m.get(s) {
                None => b.add_term(m.clone(), c.clone()),
                Some(1) => {
                    let mut rest = m.clone();
                    rest.remove(s);
                    a.add_term(rest, c.clone());
                }
                Some(_) => return None,
            }
        }
        Some((a, b))
    }

    /// Time derivative: each symbol `x^(k)` becomes `x^(k+1)`.
    pub fn time_derivative(&self) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            for (s, &e) in m {
                let mut nm = m.clone();
                if e == 1 {
                    nm.remove(s);
                } else {
                    nm.insert(s.clone(), e - 1);
                }
                let ds = VarRef::new(s.name.clone(), s.order + 1, s.prev);
                *nm.entry(ds).or_insert(0) += 1;
                let k = C::from_rational(&Rational::from_integer(e.into()));
                out.add_term(nm, c.clone() * k);
            }
        }
        out
    }

    pub fn scale(&self, k: &C) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.clone() * k.clone());
        }
        out
    }

    /// Converts an expression. Compound derivatives use the product rule;
    /// a compound left limit marks every symbol inside it.
    pub fn from_expr(e: &Expr) -> Self {
        match e {
            Expr::Num(v) => Self::constant(C::from_rational(v)),
            Expr::Var(v) => Self::symbol(v.clone()),
            Expr::Neg(a) => -Self::from_expr(a),
            Expr::Bin(op, a, b) => {
                let (a, b) = (Self::from_expr(a), Self::from_expr(b));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        let k = b.as_constant().expect("parser only admits literal divisors");
                        let r = k.to_rational().expect("literal divisor");
                        a.scale(&C::from_rational(&r.recip()))
                    }
                }
            }
            Expr::Deriv(a) => Self::from_expr(a).time_derivative(),
            Expr::Prev(a) => Self::from_expr(a).map_symbols(&|s| VarRef::new(s.name.clone(), s.order, true)),
        }
    }
}

impl<C: Coef> Add for MPoly<C> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
        self
    }
}

impl<C: Coef> Neg for MPoly<C> {
    type Output = Self;
    fn neg(self) -> Self {
        MPoly { terms: self.terms.into_iter().map(|(m, c)| (m, -c)).collect() }
    }
}

impl<C: Coef> Sub for MPoly<C> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<C: Coef> Mul for MPoly<C> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let mut m = ma.clone();
                for (s, &e) in mb {
                    *m.entry(s.clone()).or_insert(0) += e;
                }
                out.add_term(m, ca.clone() * cb.clone());
            }
        }
        out
    }
}
