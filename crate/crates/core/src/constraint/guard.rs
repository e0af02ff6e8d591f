//! Evaluation of atoms and guards under a valuation.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::mpoly::MPoly;
use crate::syntax::{Atom, Guard, VarRef};
use crate::Rational;

/// Values of symbols at one instant, left limits included.
pub type Valuation = BTreeMap<VarRef, Rational>;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("no value for {0}")]
    Unbound(String),
}

pub fn symbol_name(s: &VarRef) -> String {
    format!("{}{}{}", s.name, "'".repeat(s.order as usize), if s.prev { "-" } else { "" })
}

/// `lhs - rhs` as a polynomial in the symbols.
pub fn atom_poly<C: crate::mpoly::Coef>(a: &Atom) -> MPoly<C> {
    MPoly::from_expr(&a.lhs) - MPoly::from_expr(&a.rhs)
}

pub fn eval_atom(a: &Atom, val: &Valuation) -> Result<bool, EvalError> {
    let p: MPoly<Rational> = atom_poly(a).substitute(&|s| val.get(s).cloned());
    match p.as_constant() {
        Some(v) => Ok(a.op.holds(v.cmp(&Rational::from_integer(0.into())))),
        None => Err(EvalError::Unbound(symbol_name(p.symbols().iter().next().expect("non-constant")))),
    }
}

/// True iff every conjunct of the guard holds.
pub fn entails_guard(val: &Valuation, g: &Guard) -> Result<bool, EvalError> {
    for a in g.atoms() {
        if !eval_atom(a, val)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;
    use crate::syntax::{parse_constraint, Constraint};

    fn guard(s: &str) -> Guard {
        match parse_constraint(&format!("{s} => z = 0")).unwrap() {
            Constraint::Cond(g, _) => g,
            _ => unreachable!(),
        }
    }

    #[test]
    fn impact_guard() {
        let mut v = Valuation::new();
        v.insert(VarRef::new("ht", 0, true), Rational::from_ratio(0, 1));
        v.insert(VarRef::new("ht", 1, true), Rational::from_ratio(-14, 1));
        assert_eq!(entails_guard(&v, &guard("ht- = 0")), Ok(true));
    }

    #[test]
    fn ground_guards() {
        assert_eq!(entails_guard(&Valuation::new(), &guard("1 = 1")), Ok(true));
        let mut v = Valuation::new();
        v.insert(VarRef::plain("a#1"), Rational::from_ratio(1, 1));
        assert_eq!(entails_guard(&v, &guard("a#1 = 2")), Ok(false));
    }

    #[test]
    fn unbound_is_an_error() {
        assert_eq!(entails_guard(&Valuation::new(), &guard("x- = 0")), Err(EvalError::Unbound("x-".into())));
    }
}
