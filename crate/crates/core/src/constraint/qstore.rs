//! Per-module time-indexed constraint sets recording antecedent activation.

use std::collections::BTreeMap;

use super::skolem::{skolemize, SkolemContext};
use super::timed::{Piece, TimedConstraintSet};
use crate::syntax::{Constraint, Guard};
use crate::Rational;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct QStore {
    modules: BTreeMap<String, TimedConstraintSet>,
}

impl QStore {
    /// The least store satisfying condition (ii): each module's definition,
    /// □-closed.
    pub fn from_definitions<'a>(defs: impl IntoIterator<Item = (&'a String, &'a Constraint)>) -> Self {
        let modules = defs.into_iter().map(|(m, c)| (m.clone(), TimedConstraintSet::from_program_constraint(c).box_closure())).collect();
        QStore { modules }
    }

    pub fn get(&self, m: &str) -> Option<&TimedConstraintSet> {
        self.modules.get(m)
    }

    pub fn insert(&mut self, m: impl Into<String>, q: TimedConstraintSet) {
        self.modules.insert(m.into(), q);
    }

    pub fn modules(&self) -> impl Iterator<Item = (&String, &TimedConstraintSet)> {
        self.modules.iter()
    }

    /// Condition (i): every module set is its own □-closure.
    pub fn is_closed(&self) -> bool {
        self.modules.values().all(|q| q.is_closed())
    }

    /// Condition (ii) against the given definitions; returns violating modules.
    pub fn missing_definitions<'a>(&self, defs: impl IntoIterator<Item = (&'a String, &'a Constraint)>) -> Vec<String> {
        let mut out = Vec::new();
        for (m, c) in defs {
            let need = TimedConstraintSet::from_program_constraint(c).box_closure();
            match self.modules.get(m) {
                Some(q) if need.is_subset(q) => {}
                _ => out.push(m.clone()),
            }
        }
        out
    }
}

/// (s3): `(d ⇒ e) ∈ Q(m)(t)` with `d` entailed adds the Skolemized members
/// of `e` at `t` and re-closes. Nothing changes when the conditional is not
/// present at `t`.
pub fn expand_consequent(q: &QStore, m: &str, d: &Guard, e: &Constraint, t: &Rational, ctx: &mut SkolemContext) -> QStore {
    let cond = Constraint::cond(d.clone(), e.clone());
    let Some(qm) = q.get(m) else { return q.clone() };
    if !qm.at(t).contains(&cond) {
        return q.clone();
    }
    let added = skolemize(e, t, ctx, m).members();
    let mut out = q.clone();
    out.insert(m, qm.add_at(t, added).box_closure());
    out
}

/// Pieces of a set that start at or after `t` and before the next breakpoint.
pub fn piece_at<'a>(q: &'a TimedConstraintSet, t: &Rational) -> &'a Piece {
    &q.pieces().iter().find(|(p, _)| p.contains(t)).expect("cover").0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;
    use crate::syntax::{parse_constraint, parse_program};

    fn c(s: &str) -> Constraint {
        parse_constraint(s).unwrap()
    }

    const P1: &str = "\
A <=> f = 0 & [](f' = 1).
B <=> [](g = 0).
C <=> [](f = 5 => E a.(a = 0 & [](a' = 1) & [](a = 2 => g = 1))).
";

    fn store() -> (QStore, Vec<(String, Constraint)>) {
        let p = parse_program(P1).unwrap();
        let defs: Vec<(String, Constraint)> = p.definitions.into_iter().map(|d| (d.name, d.body)).collect();
        (QStore::from_definitions(defs.iter().map(|(a, b)| (a, b))), defs)
    }

    #[test]
    fn timer_activation() {
        let (q, defs) = store();
        let t5 = Rational::from_ratio(5, 1);
        let Constraint::Always(inner) = c("[](f = 5 => E a.(a = 0 & [](a' = 1) & [](a = 2 => g = 1)))") else { panic!() };
        let Constraint::Cond(d, e) = *inner else { panic!() };
        let mut ctx = SkolemContext::new();
        let q2 = expand_consequent(&q, "C", &d, &e, &t5, &mut ctx);
        let at5 = q2.get("C").unwrap().at(&t5);
        for s in ["a#1 = 0", "[](a#1' = 1)", "a#1' = 1", "[](a#1 = 2 => g = 1)", "a#1 = 2 => g = 1"] {
            assert!(at5.contains(&c(s)), "{s} missing at 5");
        }
        let at6 = q2.get("C").unwrap().at(&Rational::from_ratio(6, 1));
        for s in ["a#1 = 0", "[](a#1' = 1)", "[](a#1 = 2 => g = 1)"] {
            assert!(!at6.contains(&c(s)), "{s} should be gone at 6");
        }
        for s in ["a#1' = 1", "a#1 = 2 => g = 1", "f = 5 => E a.(a = 0 & [](a' = 1) & [](a = 2 => g = 1))"] {
            assert!(at6.contains(&c(s)), "{s} should persist at 6");
        }
        assert!(q2.is_closed());
        assert!(q2.missing_definitions(defs.iter().map(|(a, b)| (a, b))).is_empty());
        // the same store is unchanged by a conditional that is not present
        let other = c("x = 1 => y = 2");
        let Constraint::Cond(d2, e2) = other else { panic!() };
        assert_eq!(expand_consequent(&q, "C", &d2, &e2, &t5, &mut ctx), q);
    }

    #[test]
    fn definitions_embed_at_zero() {
        let (q, _) = store();
        let a = q.get("A").unwrap();
        assert!(a.at(&Rational::from_ratio(0, 1)).contains(&c("f = 0")));
        assert!(!a.at(&Rational::from_ratio(1, 2)).contains(&c("f = 0")));
        assert!(a.at(&Rational::from_ratio(1, 2)).contains(&c("f' = 1")));
    }
}
