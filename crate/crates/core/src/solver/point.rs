//! Consistency of a candidate at a single instant.
//!
//! Unknowns are the current values of every variable. Left limits of
//! variables with a past are known. Equations are solved by substitution;
//! conditionals fire as soon as their guards can be decided.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use super::Outcome;
use crate::constraint::{atom_poly, close_at_instant, skolemize, ConstraintSet, SkolemContext, Valuation};
use crate::constraint::guard::symbol_name;
use crate::mpoly::MPoly;
use crate::program::Program;
use crate::syntax::{Constraint, Guard, ModuleSet, Relop, VarRef};
use crate::Rational;

pub struct PointInput<'a> {
    pub program: &'a Program,
    pub t: &'a Rational,
    /// Members each user module inherits at `t`.
    pub persist: &'a BTreeMap<String, ConstraintSet>,
    /// Left limits (`prev` symbols) of variables with a past.
    pub left: &'a Valuation,
    /// Variables that existed before `t`.
    pub past: &'a BTreeSet<String>,
    pub skolem: &'a SkolemContext,
    /// Current values fixed in advance; equations over them become checks.
    pub preset: &'a Valuation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointModel {
    /// Current values, left limits excluded.
    pub values: Valuation,
    /// Constraints in force at `t`, per user module.
    pub active: BTreeMap<String, ConstraintSet>,
    /// Members inherited by later instants, per user module.
    pub carry: BTreeMap<String, ConstraintSet>,
    /// Consequents added at `t` by fired conditionals, per user module.
    pub additions: BTreeMap<String, ConstraintSet>,
    pub skolem: SkolemContext,
    pub variables: BTreeSet<String>,
}

/// Constraint sets of every user module at `t` before any conditional
/// fires: the definition at time zero plus inherited members, closed.
pub fn base_sets(program: &Program, t: &Rational, persist: &BTreeMap<String, ConstraintSet>) -> (BTreeMap<String, ConstraintSet>, BTreeMap<String, ConstraintSet>) {
    let mut active = BTreeMap::new();
    let mut carry = BTreeMap::new();
    let empty = ConstraintSet::new();
    for (m, body) in &program.defs {
        let base = if t.is_zero() { body.members() } else { ConstraintSet::new() };
        let (a, c) = close_at_instant(&base, persist.get(m).unwrap_or(&empty));
        active.insert(m.clone(), a);
        carry.insert(m.clone(), c);
    }
    (active, carry)
}

struct Item {
    poly: MPoly<Rational>,
    op: Relop,
    label: String,
}

enum GuardState {
    True,
    False,
    Pending(BTreeSet<VarRef>),
}

fn eval_guard(g: &Guard, known: &Valuation) -> GuardState {
    let mut missing = BTreeSet::new();
    for a in g.atoms() {
        let p: MPoly<Rational> = atom_poly::<Rational>(a).substitute(&|s| known.get(s).cloned());
        let syms = p.symbols();
        if syms.iter().any(|s| s.prev) {
            // left limit of a variable without a past
            return GuardState::False;
        }
        match p.as_constant() {
            Some(v) => {
                if !a.op.holds(v.cmp(&Rational::zero())) {
                    return GuardState::False;
                }
            }
            None => missing.extend(syms),
        }
    }
    if missing.is_empty() {
        GuardState::True
    } else {
        GuardState::Pending(missing)
    }
}

fn is_state(program: &Program, s: &VarRef) -> bool {
    !s.prev && s.order < program.state_orders(&s.name)
}

fn names(syms: &BTreeSet<VarRef>) -> String {
    syms.iter().map(symbol_name).collect::<Vec<_>>().join(", ")
}

/// Decides candidate `e` at the instant `input.t`.
pub fn solve_point(input: &PointInput, e: &ModuleSet) -> Outcome<PointModel> {
    let program = input.program;
    let t = input.t;
    let (mut active, mut carry) = base_sets(program, t, input.persist);
    let mut additions: BTreeMap<String, ConstraintSet> = BTreeMap::new();
    let mut skolem = input.skolem.clone();
    let mut vars: BTreeSet<String> = program.variables();
    vars.extend(skolem.generated());
    let has_past = |x: &str| !t.is_zero() && input.past.contains(x);

    let mut known: Valuation = input.left.iter().filter(|(s, _)| s.prev && has_past(&s.name)).map(|(s, v)| (s.clone(), v.clone())).collect();
    known.extend(input.preset.iter().filter(|(s, _)| !s.prev).map(|(s, v)| (s.clone(), v.clone())));

    let user: Vec<String> = e.iter().filter(|m| program.defs.contains_key(*m)).cloned().collect();
    let frames: Vec<_> = e.iter().filter_map(|m| program.frame(m)).cloned().collect();
    let mut fired: BTreeSet<(String, Constraint)> = BTreeSet::new();
    let mut pending_guards: Vec<(String, BTreeSet<VarRef>)>;

    loop {
        let mut progress = false;
        let items = collect_items(program, &active, &user, &frames, &vars, &has_past);

        for it in &items {
            let p = it.poly.substitute(&|s| known.get(s).cloned());
            let syms = p.symbols();
            if syms.iter().any(|s| s.prev) {
                continue;
            }
            if let Some(v) = p.as_constant() {
                if !it.op.holds(v.cmp(&Rational::zero())) {
                    return Outcome::Inconsistent(format!("{} fails at t = {}", it.label, t));
                }
                continue;
            }
            if it.op == Relop::Eq && syms.len() == 1 {
                let s = syms.iter().next().unwrap();
                if let Some((a, b)) = p.linear_in(s) {
                    if let (Some(a), Some(b)) = (a.as_constant(), b.as_constant()) {
                        if !a.is_zero() {
                            known.insert(s.clone(), -b / a);
                            progress = true;
                        }
                    }
                }
            }
        }

        pending_guards = Vec::new();
        for m in &user {
            let conds: Vec<Constraint> = active[m].iter().filter(|c| matches!(c, Constraint::Cond(..))).cloned().collect();
            for c in conds {
                if fired.contains(&(m.clone(), c.clone())) {
                    continue;
                }
                let Constraint::Cond(g, body) = &c else { unreachable!() };
                match eval_guard(g, &known) {
                    GuardState::False => {}
                    GuardState::Pending(missing) => pending_guards.push((m.clone(), missing)),
                    GuardState::True => {
                        fired.insert((m.clone(), c.clone()));
                        let body = skolemize(body, t, &mut skolem, m);
                        let new = body.members();
                        vars.extend(skolem.generated());
                        let mut base = active[m].clone();
                        base.extend(new.iter().cloned());
                        let (a, k) = close_at_instant(&base, &carry[m]);
                        active.insert(m.clone(), a);
                        carry.insert(m.clone(), k);
                        additions.entry(m.clone()).or_default().extend(new);
                        progress = true;
                    }
                }
            }
        }

        if !progress {
            break;
        }
    }

    // Only contradictions and undecided state remain to be reported.
    let items = collect_items(program, &active, &user, &frames, &vars, &has_past);
    let mut free: BTreeSet<VarRef> = BTreeSet::new();
    for it in &items {
        let p = it.poly.substitute(&|s| known.get(s).cloned());
        let syms = p.symbols();
        if syms.iter().any(|s| s.prev) || syms.is_empty() {
            continue;
        }
        free.extend(syms.into_iter().filter(|s| is_state(program, s)));
    }
    for (_, missing) in &pending_guards {
        free.extend(missing.iter().filter(|s| !s.prev).cloned());
    }
    for x in &vars {
        for k in 0..program.state_orders(x) {
            let s = VarRef::new(x.clone(), k, false);
            if !known.contains_key(&s) {
                free.insert(s);
            }
        }
    }
    if !free.is_empty() {
        return Outcome::Underdetermined(format!("undetermined at t = {}: {}", t, names(&free)));
    }

    let values: Valuation = known.into_iter().filter(|(s, _)| !s.prev).collect();
    Outcome::Consistent(PointModel { values, active, carry, additions, skolem, variables: vars })
}

/// Atoms the candidate imposes: body atoms of its user modules, frame
/// equalities, and continuity of lower orders implied by a derivative.
fn collect_items(
    program: &Program,
    active: &BTreeMap<String, ConstraintSet>,
    user: &[String],
    frames: &[crate::program::Frame],
    vars: &BTreeSet<String>,
    has_past: &impl Fn(&str) -> bool,
) -> Vec<Item> {
    let mut items = Vec::new();
    let mut implied: BTreeSet<(String, u32)> = BTreeSet::new();
    for m in user {
        for c in &active[m] {
            if let Constraint::Atom(a) = c {
                a.visit_vars(&mut |v| {
                    if !v.prev {
                        for j in 0..v.order {
                            implied.insert((v.name.clone(), j));
                        }
                    }
                });
                items.push(Item { poly: atom_poly(a), op: a.op, label: format!("{a} in {m}") });
            }
        }
    }
    let _ = program;
    for f in frames {
        for x in vars.iter().filter(|x| f.applies_to(x)) {
            if has_past(x) {
                items.push(continuity(x, f.order, f.name()));
            }
        }
    }
    for (x, j) in implied {
        if has_past(&x) {
            items.push(continuity(&x, j, format!("continuity of {}", symbol_name(&VarRef::new(x.clone(), j, false)))));
        }
    }
    items
}

fn continuity(x: &str, k: u32, label: String) -> Item {
    let poly = MPoly::symbol(VarRef::new(x, k, false)) - MPoly::symbol(VarRef::new(x, k, true));
    Item { poly, op: Relop::Eq, label }
}
