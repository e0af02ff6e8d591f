//! Skolemization of existentially bound trajectories.

use std::collections::{BTreeMap, BTreeSet};

use crate::syntax::Constraint;
use crate::Rational;

/// Allocates `name#k` identifiers. `#` cannot occur in program identifiers,
/// so generated names never collide with them.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SkolemContext {
    next: u64,
    assigned: BTreeMap<(String, String, Rational), String>,
}

impl SkolemContext {
    pub fn new() -> Self {
        Self::default()
    }

    /// Name for the binder `bound` of the quantifier identified by `origin`
    /// activated at `t`. Repeated requests return the same name.
    pub fn fresh(&mut self, bound: &str, origin: &str, t: &Rational) -> String {
        let key = (bound.to_string(), origin.to_string(), t.clone());
        if let Some(n) = self.assigned.get(&key) {
            return n.clone();
        }
        self.next += 1;
        let name = format!("{}#{}", skolem_base(bound), self.next);
        self.assigned.insert(key, name.clone());
        name
    }

    pub fn generated(&self) -> BTreeSet<String> {
        self.assigned.values().cloned().collect()
    }

    pub fn counter(&self) -> u64 {
        self.next
    }
}

/// The program-level name a generated identifier stands for.
pub fn skolem_base(name: &str) -> &str {
    name.split('#').next().unwrap_or(name)
}

pub fn is_skolem(name: &str) -> bool {
    name.contains('#')
}

/// Eliminates every `∃` that is not below a conditional. Quantifiers under
/// a conditional are left for that conditional's own activation.
pub fn skolemize(c: &Constraint, t: &Rational, ctx: &mut SkolemContext, origin: &str) -> Constraint {
    match c {
        Constraint::Atom(_) | Constraint::Cond(..) => c.clone(),
        Constraint::Conj(items) => Constraint::conj(items.iter().map(|i| skolemize(i, t, ctx, origin))),
        Constraint::Always(b) => Constraint::always(skolemize(b, t, ctx, origin)),
        Constraint::Exists(x, b) => {
            let key = format!("{origin}|{c}");
            let name = ctx.fresh(x, &key, t);
            skolemize(&b.rename_var(x, &name), t, ctx, origin)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;
    use crate::syntax::parse_constraint;

    fn c(s: &str) -> Constraint {
        parse_constraint(s).unwrap()
    }

    #[test]
    fn timer_is_renamed() {
        let mut ctx = SkolemContext::new();
        let t5 = Rational::from_ratio(5, 1);
        let out = skolemize(&c("E a.(a = 0 & [](a' = 1))"), &t5, &mut ctx, "C");
        assert_eq!(out, c("a#1 = 0 & [](a#1' = 1)"));
    }

    #[test]
    fn no_quantifier_is_identity() {
        let mut ctx = SkolemContext::new();
        let x = c("[](x' = 1) & (y = 1 => E b.(b = 0))");
        assert_eq!(skolemize(&x, &Rational::from_ratio(0, 1), &mut ctx, "M"), x);
        assert_eq!(ctx.counter(), 0);
    }

    #[test]
    fn distinct_activations_get_distinct_names() {
        let mut ctx = SkolemContext::new();
        let e = c("E a.(a = 0)");
        let a = skolemize(&e, &Rational::from_ratio(5, 1), &mut ctx, "C");
        let b = skolemize(&e, &Rational::from_ratio(6, 1), &mut ctx, "C");
        let again = skolemize(&e, &Rational::from_ratio(5, 1), &mut ctx, "C");
        assert_ne!(a, b);
        assert_eq!(a, again);
        assert_eq!(ctx.generated().len(), 2);
    }

    #[test]
    fn shadowing_and_nesting() {
        let mut ctx = SkolemContext::new();
        let out = skolemize(&c("E a.(a = 1 & E a.(a = 2))"), &Rational::from_ratio(0, 1), &mut ctx, "M");
        assert_eq!(out, c("a#1 = 1 & a#2 = 2"));
        assert_eq!(skolem_base("a#2"), "a");
    }
}
