//! Constraint sets as piecewise-constant functions of time and their
//! □-closure.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::Zero;

use crate::syntax::Constraint;
use crate::Rational;

pub type ConstraintSet = BTreeSet<Constraint>;

/// A point `{t}` or an open interval `(a, b)`; `b = None` is unbounded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Piece {
    Point(Rational),
    Open(Rational, Option<Rational>),
}

impl Piece {
    pub fn contains(&self, t: &Rational) -> bool {
        match self {
            Piece::Point(p) => p == t,
            Piece::Open(a, b) => t > a && b.as_ref().is_none_or(|b| t < b),
        }
    }

    pub fn start(&self) -> &Rational {
        match self {
            Piece::Point(p) => p,
            Piece::Open(a, _) => a,
        }
    }
}

impl fmt::Display for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Piece::Point(t) => write!(f, "{{{t}}}"),
            Piece::Open(a, Some(b)) => write!(f, "({a}, {b})"),
            Piece::Open(a, None) => write!(f, "({a}, inf)"),
        }
    }
}

/// Alternating point and open-interval pieces covering `[0, ∞)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimedConstraintSet {
    pieces: Vec<(Piece, ConstraintSet)>,
}

/// Closes one instant under the □ rule. Returns the closed set and the
/// members that every later instant inherits.
pub fn close_at_instant(base: &ConstraintSet, inherited: &ConstraintSet) -> (ConstraintSet, ConstraintSet) {
    let mut out: ConstraintSet = base.union(inherited).cloned().collect();
    let mut carry = inherited.clone();
    loop {
        let mut added = Vec::new();
        for c in &out {
            if let Constraint::Always(body) = c {
                for m in body.members() {
                    if !carry.contains(&m) {
                        added.push(m);
                    }
                }
            }
        }
        if added.is_empty() {
            return (out, carry);
        }
        for m in added {
            carry.insert(m.clone());
            out.insert(m);
        }
    }
}

impl TimedConstraintSet {
    /// The empty function.
    pub fn empty() -> Self {
        let zero = Rational::zero();
        TimedConstraintSet { pieces: vec![(Piece::Point(zero.clone()), ConstraintSet::new()), (Piece::Open(zero, None), ConstraintSet::new())] }
    }

    /// A program constraint: `C(0) = C`, `C(t) = {}` for `t > 0`.
    pub fn from_program_constraint(c: &Constraint) -> Self {
        let mut s = Self::empty();
        s.pieces[0].1 = c.members();
        s
    }

    pub fn from_pieces(pieces: Vec<(Piece, ConstraintSet)>) -> Self {
        let s = TimedConstraintSet { pieces };
        debug_assert!(s.well_formed(), "pieces must alternate and cover [0, inf)");
        s
    }

    pub fn well_formed(&self) -> bool {
        let mut expect = Rational::zero();
        for (i, (p, _)) in self.pieces.iter().enumerate() {
            match (i % 2, p) {
                (0, Piece::Point(t)) if *t == expect => {}
                (1, Piece::Open(a, b)) if *a == expect => match b {
                    Some(b) if b > a => expect = b.clone(),
                    None => return i == self.pieces.len() - 1,
                    _ => return false,
                },
                _ => return false,
            }
        }
        false
    }

    pub fn pieces(&self) -> &[(Piece, ConstraintSet)] {
        &self.pieces
    }

    /// The set at time `t`.
    pub fn at(&self, t: &Rational) -> &ConstraintSet {
        &self.pieces.iter().find(|(p, _)| p.contains(t)).expect("pieces cover [0, inf)").1
    }

    /// Splits pieces so that each given time is its own point piece.
    pub fn refine(&self, times: &BTreeSet<Rational>) -> Self {
        let mut out = Vec::new();
        for (p, set) in &self.pieces {
            match p {
                Piece::Point(_) => out.push((p.clone(), set.clone())),
                Piece::Open(a, b) => {
                    let mut lo = a.clone();
                    for t in times.iter().filter(|t| p.contains(t)) {
                        out.push((Piece::Open(lo.clone(), Some(t.clone())), set.clone()));
                        out.push((Piece::Point(t.clone()), set.clone()));
                        lo = t.clone();
                    }
                    out.push((Piece::Open(lo, b.clone()), set.clone()));
                }
            }
        }
        TimedConstraintSet { pieces: out }
    }

    /// Boundary times of all pieces.
    pub fn breakpoints(&self) -> BTreeSet<Rational> {
        self.pieces
            .iter()
            .filter_map(|(p, _)| match p {
                Piece::Point(t) => Some(t.clone()),
                Piece::Open(..) => None,
            })
            .collect()
    }

    /// Both operands refined to the union of their breakpoints.
    pub fn align(&self, other: &Self) -> (Self, Self) {
        let times: BTreeSet<Rational> = self.breakpoints().union(&other.breakpoints()).cloned().collect();
        (self.refine(&times), other.refine(&times))
    }

    /// Adds constraints at one instant.
    pub fn add_at(&self, t: &Rational, cs: impl IntoIterator<Item = Constraint>) -> Self {
        let mut s = self.refine(&BTreeSet::from([t.clone()]));
        let idx = s.pieces.iter().position(|(p, _)| *p == Piece::Point(t.clone())).expect("refined");
        s.pieces[idx].1.extend(cs);
        s
    }

    /// Adds constraints on every instant of the open piece starting at `a`.
    pub fn add_on_open(&self, a: &Rational, cs: impl IntoIterator<Item = Constraint>) -> Self {
        let mut s = self.clone();
        let idx = s.pieces.iter().position(|(p, _)| matches!(p, Piece::Open(x, _) if x == a)).expect("open piece starting at a");
        s.pieces[idx].1.extend(cs);
        s
    }

    /// Pointwise union.
    pub fn union(&self, other: &Self) -> Self {
        let (a, b) = self.align(other);
        TimedConstraintSet { pieces: a.pieces.into_iter().zip(b.pieces).map(|((p, x), (_, y))| (p, x.union(&y).cloned().collect())).collect() }
    }

    /// Pointwise inclusion.
    pub fn is_subset(&self, other: &Self) -> bool {
        let (a, b) = self.align(other);
        a.pieces.iter().zip(&b.pieces).all(|((_, x), (_, y))| x.is_subset(y))
    }

    /// Equality as functions of time, ignoring how pieces are cut.
    pub fn same_function(&self, other: &Self) -> bool {
        let (a, b) = self.align(other);
        a.pieces == b.pieces
    }

    /// The smallest pointwise superset closed under the □ rule. A `□a` at
    /// some instant keeps itself there and puts the members of `a` at that
    /// instant and every later one.
    pub fn box_closure(&self) -> Self {
        let mut carry = ConstraintSet::new();
        let mut out = Vec::with_capacity(self.pieces.len());
        for (p, set) in &self.pieces {
            let (closed, next) = close_at_instant(set, &carry);
            carry = next;
            out.push((p.clone(), closed));
        }
        TimedConstraintSet { pieces: out }
    }

    /// Checks extension and the □ rule without computing a closure.
    pub fn is_closed(&self) -> bool {
        let mut owed = ConstraintSet::new();
        for (_, set) in &self.pieces {
            for c in set {
                if let Constraint::Always(b) = c {
                    owed.extend(b.members());
                }
            }
            if !owed.is_subset(set) {
                return false;
            }
        }
        true
    }
}

impl fmt::Display for TimedConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (p, set) in &self.pieces {
            let items: Vec<String> = set.iter().map(|c| c.to_string()).collect();
            writeln!(f, "{p}: {{{}}}", items.join(", "))?;
        }
        Ok(())
    }
}
