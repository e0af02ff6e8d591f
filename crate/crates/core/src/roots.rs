//! Exact real-root isolation for rational polynomials.
//!
//! Roots are isolated with Sturm sequences and bisection. A root is reported
//! as [`RealRoot::Exact`] when it is rational, otherwise as an isolating
//! interval of width at most [`IRRATIONAL_WIDTH`].

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::scalar::{simplest_rational_in, Scalar};
use crate::syntax::Relop;
use crate::{Poly, Rational};

/// Final width of isolating intervals for irrational roots (1e-9).
pub fn irrational_width() -> Rational {
    Rational::new(BigInt::one(), BigInt::from(1_000_000_000u64))
}

pub const IRRATIONAL_WIDTH: &str = "1e-9";

#[derive(Clone, Debug, PartialEq)]
pub enum RealRoot {
    Exact(Rational),
    /// The root of the square-free `poly` inside `(lo, hi)`.
    Irrational { poly: Poly, lo: Rational, hi: Rational },
}

impl RealRoot {
    pub fn exact(&self) -> Option<&Rational> {
        match self {
            RealRoot::Exact(r) => Some(r),
            RealRoot::Irrational { .. } => None,
        }
    }

    pub fn approx(&self) -> f64 {
        match self {
            RealRoot::Exact(r) => r.to_f64_lossy(),
            RealRoot::Irrational { lo, hi, .. } => Rational::midpoint(lo, hi).to_f64_lossy(),
        }
    }

    pub fn lower(&self) -> &Rational {
        match self {
            RealRoot::Exact(r) => r,
            RealRoot::Irrational { lo, .. } => lo,
        }
    }

    /// Exact comparison against a rational.
    pub fn cmp_rational(&self, x: &Rational) -> Ordering {
        match self {
            RealRoot::Exact(r) => r.cmp(x),
            RealRoot::Irrational { poly, lo, hi } => {
                if x <= lo {
                    Ordering::Greater
                } else if x >= hi {
                    Ordering::Less
                } else {
                    // x is rational so it is not the root; the sign tells the side
                    let s_lo = sign(&poly.eval(lo));
                    let s_x = sign(&poly.eval(x));
                    if s_x == s_lo {
                        Ordering::Less
                    } else {
                        Ordering::Greater
                    }
                }
            }
        }
    }

    /// Comparison between two roots. Irrational pairs are refined until
    /// their intervals separate; intervals that never separate compare equal.
    pub fn cmp_root(&self, other: &RealRoot) -> Ordering {
        match (self, other) {
            (_, RealRoot::Exact(x)) => self.cmp_rational(x),
            (RealRoot::Exact(x), _) => other.cmp_rational(x).reverse(),
            (RealRoot::Irrational { poly: pa, lo: la, hi: ha }, RealRoot::Irrational { poly: pb, lo: lb, hi: hb }) => {
                let (mut la, mut ha, mut lb, mut hb) = (la.clone(), ha.clone(), lb.clone(), hb.clone());
                for _ in 0..200 {
                    if ha <= lb {
                        return Ordering::Less;
                    }
                    if hb <= la {
                        return Ordering::Greater;
                    }
                    (la, ha) = bisect_once(pa, la, ha);
                    (lb, hb) = bisect_once(pb, lb, hb);
                }
                Ordering::Equal
            }
        }
    }
}

fn bisect_once(p: &Poly, lo: Rational, hi: Rational) -> (Rational, Rational) {
    let m = Rational::midpoint(&lo, &hi);
    if sign(&p.eval(&m)) == sign(&p.eval(&lo)) {
        (m, hi)
    } else {
        (lo, m)
    }
}

pub fn sign(x: &Rational) -> i32 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

/// Sturm chain of a square-free polynomial.
#[derive(Clone, Debug)]
pub struct Sturm {
    chain: Vec<Poly>,
}

impl Sturm {
    pub fn new(p: &Poly) -> Self {
        let mut chain = vec![normalize(p.clone())];
        let d = p.derivative();
        if !d.is_zero() {
            chain.push(normalize(d));
        }
        while chain.len() >= 2 {
            let n = chain.len();
            let (_, r) = chain[n - 2].div_rem(&chain[n - 1]);
            if r.is_zero() {
                break;
            }
            chain.push(normalize(-r));
        }
        Sturm { chain }
    }

    fn variations(&self, x: &Rational) -> usize {
        let mut last = 0;
        let mut v = 0;
        for p in &self.chain {
            let s = sign(&p.eval(x));
            if s != 0 {
                if last != 0 && s != last {
                    v += 1;
                }
                last = s;
            }
        }
        v
    }

    /// Number of distinct roots in `(a, b]`.
    pub fn count(&self, a: &Rational, b: &Rational) -> usize {
        self.variations(a).saturating_sub(self.variations(b))
    }
}

// scaling by a positive constant keeps every sign and tames coefficient growth
fn normalize(p: Poly) -> Poly {
    match p.leading() {
        Some(l) => {
            let k = l.abs().recip();
            p.scale(&k)
        }
        None => p,
    }
}

/// `1 + max |a_i / a_n|`: every root has smaller magnitude.
pub fn cauchy_bound(p: &Poly) -> Rational {
    let lead = p.leading().expect("nonzero polynomial").abs();
    let n = p.degree().unwrap_or(0);
    let mut m = Rational::zero();
    for c in &p.coeffs()[..n] {
        let r = c.abs() / &lead;
        if r > m {
            m = r;
        }
    }
    m + Rational::one()
}

/// Leading coefficient of the primitive integer multiple of `p`.
fn integer_leading(p: &Poly) -> BigInt {
    let mut den = BigInt::one();
    for c in p.coeffs() {
        den = den.lcm(c.denom());
    }
    let ints: Vec<BigInt> = p.coeffs().iter().map(|c| (c * Rational::from_integer(den.clone())).to_integer()).collect();
    let mut g = BigInt::zero();
    for i in &ints {
        g = g.gcd(i);
    }
    let lead = ints.last().cloned().unwrap_or_else(BigInt::one);
    if g.is_zero() {
        lead.abs()
    } else {
        (lead / g).abs()
    }
}

/// Resolves the unique root of square-free `q` in `(lo, hi]`.
fn resolve(q: &Poly, st: &Sturm, mut lo: Rational, mut hi: Rational) -> RealRoot {
    if q.eval(&hi).is_zero() {
        return RealRoot::Exact(hi);
    }
    let l = integer_leading(q);
    let sep = Rational::new(BigInt::one(), &l * &l);
    while &hi - &lo >= sep {
        let m = Rational::midpoint(&lo, &hi);
        if st.count(&lo, &m) == 1 {
            hi = m;
            if q.eval(&hi).is_zero() {
                return RealRoot::Exact(hi);
            }
        } else {
            lo = m;
        }
    }
    let s = simplest_rational_in(&lo, &hi);
    if q.eval(&s).is_zero() {
        return RealRoot::Exact(s);
    }
    let w = irrational_width();
    while &hi - &lo > w {
        let m = Rational::midpoint(&lo, &hi);
        if st.count(&lo, &m) == 1 {
            hi = m;
        } else {
            lo = m;
        }
    }
    RealRoot::Irrational { poly: q.clone(), lo, hi }
}

/// All distinct real roots in `(lo, hi]`, increasing. `hi = None` means
/// unbounded. The zero polynomial has no isolated roots and yields nothing.
pub fn roots_in(p: &Poly, lo: &Rational, hi: Option<&Rational>) -> Vec<RealRoot> {
    if p.is_constant() {
        return Vec::new();
    }
    let q = p.square_free();
    let st = Sturm::new(&q);
    let bound = cauchy_bound(&q);
    let upper = match hi {
        Some(h) if *h < bound => h.clone(),
        _ => bound,
    };
    if *lo >= upper {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut stack = vec![(lo.clone(), upper)];
    // depth-first, left half first, so roots come out sorted
    while let Some((a, b)) = stack.pop() {
        let n = st.count(&a, &b);
        if n == 0 {
            continue;
        }
        if n == 1 {
            out.push(resolve(&q, &st, a, b));
            continue;
        }
        let m = Rational::midpoint(&a, &b);
        stack.push((m.clone(), b));
        stack.push((a, m));
    }
    out
}

/// Smallest root in `(lo, hi]`.
pub fn first_root_in(p: &Poly, lo: &Rational, hi: Option<&Rational>) -> Option<RealRoot> {
    if p.is_constant() {
        return None;
    }
    let q = p.square_free();
    let st = Sturm::new(&q);
    let bound = cauchy_bound(&q);
    let mut b = match hi {
        Some(h) if *h < bound => h.clone(),
        _ => bound,
    };
    let mut a = lo.clone();
    if a >= b || st.count(&a, &b) == 0 {
        return None;
    }
    while st.count(&a, &b) > 1 {
        let m = Rational::midpoint(&a, &b);
        if st.count(&a, &m) >= 1 {
            b = m;
        } else {
            a = m;
        }
    }
    Some(resolve(&q, &st, a, b))
}

/// Sign of `p` just to the right of `t`: the sign of its first
/// non-vanishing derivative there.
pub fn sign_right_of(p: &Poly, t: &Rational) -> i32 {
    let mut d = p.clone();
    while !d.is_zero() {
        let s = sign(&d.eval(t));
        if s != 0 {
            return s;
        }
        d = d.derivative();
    }
    0
}

/// Sign of `p` just to the left of `t`.
pub fn sign_left_of(p: &Poly, t: &Rational) -> i32 {
    let mut d = p.clone();
    let mut k = 0;
    while !d.is_zero() {
        let s = sign(&d.eval(t));
        if s != 0 {
            return if k % 2 == 0 { s } else { -s };
        }
        d = d.derivative();
        k += 1;
    }
    0
}

pub fn relop_holds(op: Relop, s: i32) -> bool {
    op.holds(s.cmp(&0))
}

/// First time in `(0, horizon]` at which the truth of `p op 0` is not
/// constant around it: either the value at the root differs from a side,
/// or the two sides differ. Touching zero without a truth change (for
/// `<=`/`>=`) is skipped.
pub fn first_truth_change(p: &Poly, op: Relop, horizon: Option<&Rational>) -> Option<RealRoot> {
    let zero = Rational::zero();
    for r in roots_in(p, &zero, horizon) {
        let (left, right) = match &r {
            RealRoot::Exact(t) => (sign_left_of(p, t), sign_right_of(p, t)),
            RealRoot::Irrational { lo, hi, .. } => (sign(&p.eval(lo)), sign(&p.eval(hi))),
        };
        let at = relop_holds(op, 0);
        if relop_holds(op, left) != at || relop_holds(op, right) != at {
            return Some(r);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn poly(cs: &[i64]) -> Poly {
        Poly::new(cs.iter().map(|&c| q(c, 1)).collect())
    }

    #[test]
    fn ball_impact_is_exact() {
        // 10 - 4.9 t^2
        let p = Poly::new(vec![q(10, 1), q(0, 1), q(-49, 10)]);
        let r = first_root_in(&p, &q(0, 1), None).unwrap();
        assert_eq!(r, RealRoot::Exact(q(10, 7)));
    }

    #[test]
    fn irrational_root_is_bracketed() {
        // t^2 - 2
        let p = poly(&[-2, 0, 1]);
        let r = first_root_in(&p, &q(0, 1), None).unwrap();
        let RealRoot::Irrational { lo, hi, .. } = &r else { panic!("{r:?}") };
        assert!((hi - lo) <= irrational_width());
        assert!(lo * lo < q(2, 1) && hi * hi > q(2, 1));
        assert_eq!(r.cmp_rational(&q(141, 100)), Ordering::Greater);
        assert_eq!(r.cmp_rational(&q(142, 100)), Ordering::Less);
    }

    #[test]
    fn repeated_and_multiple_roots() {
        // (t-1)^2 (t-3)(2t-5)
        let p = poly(&[1, -2, 1]) * poly(&[-3, 1]) * poly(&[-5, 2]);
        let rs: Vec<_> = roots_in(&p, &q(0, 1), None).into_iter().map(|r| r.exact().cloned().unwrap()).collect();
        assert_eq!(rs, vec![q(1, 1), q(5, 2), q(3, 1)]);
        assert_eq!(first_root_in(&p, &q(1, 1), Some(&q(3, 1))), Some(RealRoot::Exact(q(5, 2))));
    }

    #[test]
    fn horizon_is_inclusive() {
        let p = poly(&[-2, 1]);
        assert_eq!(first_root_in(&p, &q(0, 1), Some(&q(2, 1))), Some(RealRoot::Exact(q(2, 1))));
        assert_eq!(first_root_in(&p, &q(0, 1), Some(&q(19, 10))), None);
        assert_eq!(first_root_in(&p, &q(2, 1), None), None);
    }

    #[test]
    fn one_sided_signs() {
        // t^2 touches zero at 0
        let p = poly(&[0, 0, 1]);
        assert_eq!(sign_right_of(&p, &q(0, 1)), 1);
        assert_eq!(sign_left_of(&p, &q(0, 1)), 1);
        let p = poly(&[0, 0, 0, 1]);
        assert_eq!(sign_left_of(&p, &q(0, 1)), -1);
        assert_eq!(sign_right_of(&Poly::zero(), &q(0, 1)), 0);
    }

    #[test]
    fn truth_change_skips_harmless_touch() {
        // (t-1)^2 >= 0 never changes truth; (t-1)^2 > 0 fails at t = 1
        let p = poly(&[1, -2, 1]);
        assert_eq!(first_truth_change(&p, Relop::Ge, None), None);
        assert_eq!(first_truth_change(&p, Relop::Gt, None), Some(RealRoot::Exact(q(1, 1))));
        assert_eq!(first_truth_change(&p, Relop::Eq, None), Some(RealRoot::Exact(q(1, 1))));
        assert_eq!(first_truth_change(&Poly::zero(), Relop::Eq, None), None);
    }

    #[test]
    fn large_denominators_detected() {
        // (997 t - 1000) (t + 3)
        let p = poly(&[-1000, 997]) * poly(&[3, 1]);
        assert_eq!(first_root_in(&p, &q(0, 1), None), Some(RealRoot::Exact(q(1000, 997))));
    }

    #[test]
    fn comparisons_between_roots() {
        let s2 = first_root_in(&poly(&[-2, 0, 1]), &q(0, 1), None).unwrap();
        let s3 = first_root_in(&poly(&[-3, 0, 1]), &q(0, 1), None).unwrap();
        assert_eq!(s2.cmp_root(&s3), Ordering::Less);
        assert_eq!(s3.cmp_root(&RealRoot::Exact(q(3, 2))), Ordering::Greater);
        assert_eq!(s2.cmp_root(&s2.clone()), Ordering::Equal);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        // dense sampling oracle: no sign change of p strictly before the
        // reported first root, and a sign change or zero right at it
        #[test]
        fn first_root_matches_sampling(cs in proptest::collection::vec(-6i64..=6, 2..5), num in 1i64..40) {
            let p = poly(&cs) * poly(&[-num, 8]);
            prop_assume!(!p.is_constant());
            let r = first_root_in(&p, &q(0, 1), Some(&q(10, 1))).expect("num/8 is a root in range");
            let t = r.lower().clone();
            prop_assert!(t <= q(num, 8));
            let steps = 400;
            let mut prev = sign(&p.eval(&q(1, 10_000)));
            for k in 1..=steps {
                let x = &t * q(k, steps);
                if x <= q(1, 10_000) { continue; }
                if k == steps { break; }
                let s = sign(&p.eval(&x));
                prop_assert!(s != 0 || x == t, "zero at {x} before {t}");
                if prev != 0 && s != 0 { prop_assert_eq!(s, prev); }
                prev = s;
            }
            if let RealRoot::Exact(e) = &r {
                prop_assert!(p.eval(e).is_zero());
            }
        }

        #[test]
        fn root_counts_match_product_form(rs in proptest::collection::btree_set(-20i64..20, 1..5)) {
            let mut p = Poly::one();
            for &r in &rs { p = p * poly(&[-r, 3]); }
            let found: Vec<Rational> = roots_in(&p, &q(-100, 1), None).into_iter().map(|r| r.exact().cloned().unwrap()).collect();
            let expected: Vec<Rational> = rs.iter().map(|&r| q(r, 3)).filter(|x| *x > q(-100, 1)).collect();
            prop_assert_eq!(found, expected);
        }
    }
}
