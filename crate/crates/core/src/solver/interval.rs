//! Consistency of a candidate on the open interval after an instant.
//!
//! Trajectories are polynomials in local time `τ = t - start`. A defining
//! equation `x^(k) = r(τ)` is integrated `k` times from the values carried
//! over by right continuity. The interval ends at the first instant where
//! the truth of some atom in the store can change.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use super::Outcome;
use crate::constraint::guard::symbol_name;
use crate::constraint::{atom_poly, close_at_instant, ConstraintSet, Valuation};
use crate::mpoly::MPoly;
use crate::program::Program;
use crate::roots::{first_truth_change, sign_right_of, RealRoot};
use crate::syntax::{Atom, Constraint, Guard, ModuleSet, Relop, VarRef};
use crate::{Poly, Rational};

/// Polynomials above this degree are rejected.
pub const DEGREE_CAP: usize = 16;

pub struct IntervalInput<'a> {
    pub program: &'a Program,
    pub start: &'a Rational,
    pub horizon: Option<&'a Rational>,
    /// Members each user module inherits after the instant `start`.
    pub persist: &'a BTreeMap<String, ConstraintSet>,
    /// Values at `start`.
    pub init: &'a Valuation,
    pub variables: &'a BTreeSet<String>,
    /// Trajectories fixed in advance, in local time.
    pub preset: Option<&'a BTreeMap<String, Poly>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum IntervalEnd {
    /// No event and no horizon.
    Unbounded,
    Horizon(Rational),
    Event(Rational),
    /// The first event is an irrational instant.
    Irrational(RealRoot),
}

impl IntervalEnd {
    pub fn time(&self) -> Option<&Rational> {
        match self {
            IntervalEnd::Horizon(t) | IntervalEnd::Event(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntervalModel {
    /// Trajectories in local time.
    pub polys: BTreeMap<String, Poly>,
    pub end: IntervalEnd,
    pub active: BTreeMap<String, ConstraintSet>,
    pub carry: BTreeMap<String, ConstraintSet>,
    pub additions: BTreeMap<String, ConstraintSet>,
    /// Guards decided from the values at `start` because their symbols had
    /// no trajectory yet.
    pub guard_fallbacks: usize,
}

/// Inside an interval a left limit equals the value.
fn interior(a: &Atom) -> MPoly<Poly> {
    atom_poly::<Poly>(a).map_symbols(&|s| VarRef::new(s.name.clone(), s.order, false))
}

fn substitute(p: &MPoly<Poly>, solved: &BTreeMap<String, Poly>) -> MPoly<Poly> {
    p.substitute(&|s| solved.get(&s.name).map(|q| q.nth_derivative(s.order)))
}

enum GuardState {
    True,
    False,
    Pending,
}

fn eval_guard(g: &Guard, lookup: &impl Fn(&VarRef) -> Option<Poly>) -> GuardState {
    let mut pending = false;
    for a in g.atoms() {
        let p = interior(a).substitute(lookup);
        match p.as_constant() {
            Some(c) => {
                if !a.op.holds(sign_right_of(&c, &Rational::zero()).cmp(&0)) {
                    return GuardState::False;
                }
            }
            None => pending = true,
        }
    }
    if pending {
        GuardState::Pending
    } else {
        GuardState::True
    }
}

/// Decides candidate `e` on the interval starting at `input.start`.
pub fn solve_interval(input: &IntervalInput, e: &ModuleSet) -> Outcome<IntervalModel> {
    let program = input.program;
    let empty = ConstraintSet::new();
    let mut active = BTreeMap::new();
    let mut carry = BTreeMap::new();
    for m in program.defs.keys() {
        let (a, c) = close_at_instant(&ConstraintSet::new(), input.persist.get(m).unwrap_or(&empty));
        active.insert(m.clone(), a);
        carry.insert(m.clone(), c);
    }
    let mut additions: BTreeMap<String, ConstraintSet> = BTreeMap::new();
    let user: Vec<String> = e.iter().filter(|m| program.defs.contains_key(*m)).cloned().collect();

    // values carried into the interval by right continuity
    let mut right: BTreeMap<(String, u32), Rational> = BTreeMap::new();
    for x in input.variables {
        for f in program.frames.iter().filter(|f| f.applies_to(x)) {
            if let Some(v) = input.init.get(&VarRef::new(x.clone(), f.order, false)) {
                right.insert((x.clone(), f.order), v.clone());
            }
        }
    }

    let mut solved: BTreeMap<String, Poly> = input.preset.cloned().unwrap_or_default();
    let mut fired: BTreeSet<(String, Constraint)> = BTreeSet::new();
    let mut guard_fallbacks = 0;
    let mut missing_init: BTreeSet<String> = BTreeSet::new();

    loop {
        let mut progress = false;
        let eqs = equations(&active, &user);

        // candidate definitions, lowest order first
        let mut defs: Vec<(u32, String, Poly)> = Vec::new();
        missing_init.clear();
        for (a, m) in &eqs {
            let p = substitute(&interior(a), &solved);
            if let Some(c) = p.as_constant() {
                if a.op == Relop::Eq && !c.is_zero() {
                    return Outcome::Inconsistent(format!("{a} in {m} fails after t = {}", input.start));
                }
                continue;
            }
            if a.op != Relop::Eq {
                continue;
            }
            let syms = p.symbols();
            if syms.len() != 1 {
                continue;
            }
            let s = syms.into_iter().next().unwrap();
            let Some((ca, cb)) = p.linear_in(&s) else { continue };
            let (Some(ca), Some(cb)) = (ca.as_constant(), cb.as_constant()) else { continue };
            let Some(k) = ca.as_constant() else { continue };
            if k.is_zero() {
                continue;
            }
            let rhs = (-cb).scale(&k.recip());
            defs.push((s.order, s.name.clone(), rhs));
        }
        defs.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
        for (k, x, rhs) in defs {
            let mut poly = rhs;
            let mut ok = true;
            for j in (0..k).rev() {
                match right.get(&(x.clone(), j)) {
                    Some(v) => poly = poly.integrate(v.clone()),
                    None => {
                        ok = false;
                        missing_init.insert(symbol_name(&VarRef::new(x.clone(), j, false)));
                        break;
                    }
                }
            }
            if ok {
                if poly.degree().unwrap_or(0) > DEGREE_CAP {
                    return Outcome::Unsupported(format!("trajectory of {x} exceeds degree {DEGREE_CAP}"));
                }
                solved.insert(x, poly);
                progress = true;
                break;
            }
        }

        if progress {
            continue;
        }
        let direct = |s: &VarRef| solved.get(&s.name).map(|q| q.nth_derivative(s.order));
        match fire_guards(&user, &mut active, &mut carry, &mut additions, &mut fired, &direct) {
            Err(msg) => return Outcome::Unsupported(msg),
            Ok(true) => continue,
            Ok(false) => {}
        }
        // fall back to the values at the start for undecided guards
        let fallback = |s: &VarRef| direct(s).or_else(|| right.get(&(s.name.clone(), s.order)).map(|v| Poly::constant(v.clone())));
        let before = fired.len();
        match fire_guards(&user, &mut active, &mut carry, &mut additions, &mut fired, &fallback) {
            Err(msg) => return Outcome::Unsupported(msg),
            Ok(true) => guard_fallbacks += fired.len() - before,
            Ok(false) => break,
        }
    }

    // leftovers
    let eqs = equations(&active, &user);
    let mut coupled = BTreeSet::new();
    for (a, _) in &eqs {
        let p = substitute(&interior(a), &solved);
        if p.as_constant().is_some() {
            continue;
        }
        let names: BTreeSet<String> = p.symbols().into_iter().map(|s| s.name).collect();
        if a.op == Relop::Eq {
            let orders: BTreeSet<u32> = p.symbols().into_iter().map(|s| s.order).collect();
            if names.len() == 1 && orders.len() > 1 {
                return Outcome::Unsupported(format!("{a} relates derivatives of one variable"));
            }
            if names.len() > 1 && names.iter().all(|x| !missing_init.contains(x)) {
                coupled.extend(names);
            }
        }
    }
    let pending_guards = user.iter().any(|m| {
        active[m].iter().any(|c| matches!(c, Constraint::Cond(..)) && !fired.contains(&(m.clone(), c.clone())) && guard_undecided(c, &solved))
    });
    let unsolved: BTreeSet<&String> = input.variables.iter().filter(|x| !solved.contains_key(*x)).collect();
    if !unsolved.is_empty() || pending_guards {
        if !coupled.is_empty() && unsolved.iter().all(|x| coupled.contains(*x)) {
            return Outcome::Unsupported(format!("coupled equations in {}", coupled.into_iter().collect::<Vec<_>>().join(", ")));
        }
        let mut what: Vec<String> = unsolved.iter().map(|x| x.to_string()).collect();
        what.extend(missing_init.iter().map(|s| format!("initial {s}")));
        return Outcome::Underdetermined(format!("undetermined after t = {}: {}", input.start, what.join(", ")));
    }

    // right continuity of frame variables
    for ((x, k), v) in &right {
        if let Some(p) = solved.get(x) {
            if &p.nth_derivative(*k).eval(&Rational::zero()) != v {
                return Outcome::Inconsistent(format!("right continuity of {} fails after t = {}", symbol_name(&VarRef::new(x.clone(), *k, false)), input.start));
            }
        }
    }
    // relations other than equalities hold just after the start
    for (a, m) in &eqs {
        if a.op == Relop::Eq {
            continue;
        }
        let p = substitute(&interior(a), &solved);
        if let Some(c) = p.as_constant() {
            if !a.op.holds(sign_right_of(&c, &Rational::zero()).cmp(&0)) {
                return Outcome::Inconsistent(format!("{a} in {m} fails after t = {}", input.start));
            }
        }
    }

    let end = next_event(input, e, &active, &solved);
    Outcome::Consistent(IntervalModel { polys: solved, end, active, carry, additions, guard_fallbacks })
}

fn guard_undecided(c: &Constraint, solved: &BTreeMap<String, Poly>) -> bool {
    let Constraint::Cond(g, _) = c else { return false };
    matches!(eval_guard(g, &|s: &VarRef| solved.get(&s.name).map(|q| q.nth_derivative(s.order))), GuardState::Pending)
}

/// Body atoms of the candidate's user modules.
fn equations(active: &BTreeMap<String, ConstraintSet>, user: &[String]) -> Vec<(Atom, String)> {
    let mut out = Vec::new();
    for m in user {
        for c in &active[m] {
            if let Constraint::Atom(a) = c {
                out.push((a.clone(), m.clone()));
            }
        }
    }
    out
}

fn fire_guards(
    user: &[String],
    active: &mut BTreeMap<String, ConstraintSet>,
    carry: &mut BTreeMap<String, ConstraintSet>,
    additions: &mut BTreeMap<String, ConstraintSet>,
    fired: &mut BTreeSet<(String, Constraint)>,
    lookup: &impl Fn(&VarRef) -> Option<Poly>,
) -> Result<bool, String> {
    let mut progress = false;
    for m in user {
        let conds: Vec<Constraint> = active[m].iter().filter(|c| matches!(c, Constraint::Cond(..))).cloned().collect();
        for c in conds {
            if fired.contains(&(m.clone(), c.clone())) {
                continue;
            }
            let Constraint::Cond(g, body) = &c else { unreachable!() };
            if let GuardState::True = eval_guard(g, lookup) {
                let new = body.members();
                if new.iter().any(|n| matches!(n, Constraint::Exists(..))) {
                    return Err(format!("existential in {m} activated on an interval"));
                }
                fired.insert((m.clone(), c.clone()));
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
    Ok(progress)
}

/// Earliest instant where an atom of the store may change truth: guards of
/// every module, inequalities of adopted modules, and every atom of the
/// modules left out.
fn next_event(input: &IntervalInput, e: &ModuleSet, active: &BTreeMap<String, ConstraintSet>, solved: &BTreeMap<String, Poly>) -> IntervalEnd {
    let horizon = input.horizon.map(|h| h - input.start);
    let mut best: Option<RealRoot> = None;
    let mut consider = |a: &Atom| {
        let p = substitute(&interior(a), solved);
        let Some(c) = p.as_constant() else { return };
        if c.is_zero() {
            return;
        }
        if let Some(r) = first_truth_change(&c, a.op, horizon.as_ref()) {
            if best.as_ref().is_none_or(|b| r.cmp_root(b).is_lt()) {
                best = Some(r);
            }
        }
    };
    for (m, cs) in active {
        let adopted = e.contains(m);
        for c in cs {
            match c {
                Constraint::Cond(g, _) => g.atoms().iter().for_each(&mut consider),
                Constraint::Atom(a) if !adopted || a.op != Relop::Eq => consider(a),
                _ => {}
            }
        }
    }
    match best {
        Some(RealRoot::Exact(t)) => IntervalEnd::Event(t + input.start),
        Some(RealRoot::Irrational { poly, lo, hi }) => {
            IntervalEnd::Irrational(RealRoot::Irrational { poly: poly.shift(&-input.start.clone()), lo: lo + input.start, hi: hi + input.start })
        }
        None => match input.horizon {
            Some(h) => IntervalEnd::Horizon(h.clone()),
            None => IntervalEnd::Unbounded,
        },
    }
}
