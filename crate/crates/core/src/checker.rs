//! Independent verification of a trajectory and constraint store against a
//! program: every piece must satisfy some element of the poset, no larger
//! element may be satisfiable with the same history, fired consequents must
//! be stored, and the store must be the least one doing so.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Zero;

use crate::constraint::guard::symbol_name;
use crate::constraint::{atom_poly, close_at_instant, ConstraintSet, SkolemContext, Valuation};
use crate::program::Program;
use crate::roots::{first_truth_change, roots_in, RealRoot};
use crate::simulator::{Branch, Phase, QListing, Values};
use crate::solver::point::base_sets;
use crate::solver::{solve_interval, solve_point, IntervalInput, IntervalModel, Outcome, PointInput, PointModel};
use crate::syntax::{parse_constraint, Constraint, ModuleSet, Relop, VarRef};
use crate::{Poly, Rational};

/// Pieces with at most this many stored constraints get every single
/// removal tried; larger ones a deterministic sample of this size.
pub const MINIMALITY_EXHAUSTIVE: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Condition {
    Structure,
    Closure,
    Definitions,
    Satisfied,
    Maximal,
    Consequents,
    Minimal,
    Unsupported,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Structure => "structure",
            Condition::Closure => "(i)",
            Condition::Definitions => "(ii)",
            Condition::Satisfied => "(s1)",
            Condition::Maximal => "(s2)",
            Condition::Consequents => "(s3)",
            Condition::Minimal => "(iv)",
            Condition::Unsupported => "unsupported",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Finding {
    pub condition: Condition,
    pub time: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at t = {}: {}", self.condition, self.time, self.message)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject,
    Unsupported,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub verdict: Verdict,
    pub findings: Vec<Finding>,
    /// Element chosen for each checked piece.
    pub adopted: Vec<(String, ModuleSet)>,
}

impl Report {
    pub fn accepted(&self) -> bool {
        self.verdict == Verdict::Accept
    }

    pub fn has(&self, c: Condition) -> bool {
        self.findings.iter().any(|f| f.condition == c)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = match self.verdict {
            Verdict::Accept => "accept",
            Verdict::Reject => "reject",
            Verdict::Unsupported => "unsupported",
        };
        writeln!(f, "verdict: {v}")?;
        for (t, e) in &self.adopted {
            writeln!(f, "adopted at t = {t}: {}", crate::syntax::poset::fmt_set(e))?;
        }
        for x in &self.findings {
            writeln!(f, "{x}")?;
        }
        Ok(())
    }
}

/// A claimed solution: phases in the trace format. Stores are optional;
/// when every listing is empty only the trajectory is checked.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub phases: Vec<Phase>,
}

impl Certificate {
    pub fn from_branch(b: &Branch) -> Self {
        Certificate { phases: b.phases.clone() }
    }

    fn has_store(&self) -> bool {
        self.phases.iter().any(|p| match p {
            Phase::Point(p) => !p.q_active.is_empty(),
            Phase::Interval(i) => !i.q_active.is_empty(),
            Phase::Accumulation { .. } => false,
        })
    }
}

pub fn verify_simulator_output(program: &Program, branch: &Branch) -> Report {
    verify(program, &Certificate::from_branch(branch))
}

struct Walk<'a> {
    program: &'a Program,
    persist: BTreeMap<String, ConstraintSet>,
    skolem: SkolemContext,
    findings: Vec<Finding>,
    adopted: Vec<(String, ModuleSet)>,
    /// Carry implied by the certificate's own listings.
    cert_carry: BTreeMap<String, ConstraintSet>,
    check_store: bool,
}

fn valuation(values: &Values, prev: bool) -> Valuation {
    values.iter().flat_map(|(x, m)| m.iter().map(move |(k, v)| (VarRef::new(x.clone(), *k, prev), v.clone()))).collect()
}

fn span(a: &Rational, b: &Rational) -> String {
    format!("({a}, {b})")
}

pub fn verify(program: &Program, cert: &Certificate) -> Report {
    let mut w = Walk {
        program,
        persist: BTreeMap::new(),
        skolem: SkolemContext::new(),
        findings: Vec::new(),
        adopted: Vec::new(),
        cert_carry: BTreeMap::new(),
        check_store: cert.has_store(),
    };
    w.run(cert);
    let verdict = if w.findings.iter().any(|f| f.condition != Condition::Unsupported) {
        Verdict::Reject
    } else if w.findings.is_empty() {
        Verdict::Accept
    } else {
        Verdict::Unsupported
    };
    Report { verdict, findings: w.findings, adopted: w.adopted }
}

impl<'a> Walk<'a> {
    fn fail(&mut self, condition: Condition, time: String, message: String) {
        self.findings.push(Finding { condition, time, message });
    }

    fn max_order(&self, x: &str) -> u32 {
        self.program.max_order(x) + 1
    }

    /// Values of every order at local time `tau`, as current or left values.
    fn sample(&self, polys: &BTreeMap<String, Poly>, tau: &Rational, prev: bool) -> Valuation {
        let mut out = Valuation::new();
        for (x, p) in polys {
            for k in 0..=self.max_order(x) {
                out.insert(VarRef::new(x.clone(), k, prev), p.nth_derivative(k).eval(tau));
            }
        }
        out
    }

    fn structure(&mut self, cert: &Certificate) -> bool {
        let zero = Rational::zero();
        match cert.phases.first() {
            None => {
                self.fail(Condition::Satisfied, "0".into(), "trajectory undefined".into());
                return false;
            }
            Some(Phase::Point(p)) if p.time == zero => {}
            Some(_) => {
                self.fail(Condition::Structure, "0".into(), "first phase must be the point t = 0".into());
                return false;
            }
        }
        for pair in cert.phases.windows(2) {
            let ok = match (&pair[0], &pair[1]) {
                (Phase::Point(p), Phase::Interval(i)) => p.time == i.start && i.start < i.end,
                (Phase::Point(p), Phase::Accumulation { start, end }) => p.time == *start && start < end,
                (Phase::Interval(i), Phase::Point(p)) => i.end == p.time,
                (Phase::Accumulation { end, .. }, Phase::Point(p)) => *end == p.time && p.left.is_some(),
                _ => false,
            };
            if !ok {
                let t = match &pair[1] {
                    Phase::Point(p) => p.time.to_string(),
                    Phase::Interval(i) => i.start.to_string(),
                    Phase::Accumulation { start, .. } => start.to_string(),
                };
                self.fail(Condition::Structure, t, format!("{} followed by {} out of order", pair[0].kind(), pair[1].kind()));
                return false;
            }
        }
        true
    }

    fn run(&mut self, cert: &Certificate) {
        if !self.structure(cert) {
            return;
        }
        let mut left = Valuation::new();
        let mut past = BTreeSet::new();
        let mut at_start = Valuation::new();
        for (idx, phase) in cert.phases.iter().enumerate() {
            match phase {
                Phase::Point(p) => {
                    if let Some(l) = &p.left {
                        left = valuation(l, true);
                        past = l.keys().cloned().collect();
                    }
                    let mut preset = valuation(&p.values, false);
                    if let Some(Phase::Interval(next)) = cert.phases.get(idx + 1) {
                        for (s, v) in self.sample(&next.segments, &Rational::zero(), false) {
                            preset.entry(s).or_insert(v);
                        }
                    }
                    let q = if self.check_store { Some(&p.q_active) } else { None };
                    if !self.point(&p.time, &preset, &left, &past, Some(&p.adopted), q) {
                        return;
                    }
                    at_start = preset;
                }
                Phase::Interval(i) => {
                    let q = if self.check_store { Some(&i.q_active) } else { None };
                    match self.interval(&i.start, &i.end, &i.segments, &at_start, &i.adopted, q) {
                        Some(polys_end) => {
                            left = polys_end;
                            past = i.segments.keys().cloned().collect();
                        }
                        None => return,
                    }
                }
                Phase::Accumulation { .. } => {}
            }
        }
    }

    /// Checks one instant. Returns false when the walk cannot continue.
    fn point(&mut self, t: &Rational, preset: &Valuation, left: &Valuation, past: &BTreeSet<String>, hint: Option<&ModuleSet>, q: Option<&QListing>) -> bool {
        let program = self.program;
        let (persist, skolem) = (self.persist.clone(), self.skolem.clone());
        let input = PointInput { program, t, persist: &persist, left, past, skolem: &skolem, preset };
        let poset = &program.poset;
        let results: Vec<Outcome<PointModel>> = poset.elements().iter().map(|e| solve_point(&input, e)).collect();
        let ok: Vec<usize> = (0..poset.len()).filter(|&i| matches!(results[i], Outcome::Consistent(_))).collect();
        let maximal: Vec<usize> = ok.iter().copied().filter(|&i| !poset.above(i).iter().any(|j| ok.contains(j))).collect();
        let ts = t.to_string();
        let Some(&chosen) = hint.and_then(|h| poset.index_of(h)).filter(|i| maximal.contains(i)).as_ref().or(maximal.first()) else {
            let why = hint.and_then(|h| poset.index_of(h)).or_else(|| poset.maximal().first().copied()).map(|i| describe(&results[i])).unwrap_or_default();
            self.fail(Condition::Satisfied, ts, format!("no element of the poset holds: {why}"));
            return false;
        };
        if let Some(h) = hint {
            match poset.index_of(h) {
                Some(i) if maximal.contains(&i) => {}
                Some(i) if ok.contains(&i) => self.fail(Condition::Maximal, ts.clone(), format!("{} holds but is not maximal", crate::syntax::poset::fmt_set(h))),
                Some(i) => self.fail(Condition::Satisfied, ts.clone(), format!("{} fails: {}", crate::syntax::poset::fmt_set(h), describe(&results[i]))),
                None => self.fail(Condition::Structure, ts.clone(), format!("{} is not an element of the poset", crate::syntax::poset::fmt_set(h))),
            }
        }
        let e = poset.elements()[chosen].clone();
        // (s2): larger elements with the same history but free current values
        let free = Valuation::new();
        let open = PointInput { preset: &free, ..input };
        for j in poset.above(chosen) {
            let r = solve_point(&open, &poset.elements()[j]);
            if matches!(r, Outcome::Consistent(_) | Outcome::Underdetermined(_)) {
                self.fail(Condition::Maximal, ts.clone(), format!("{} is satisfiable with the same history", crate::syntax::poset::fmt_set(&poset.elements()[j])));
            }
        }
        let Outcome::Consistent(model) = results[chosen].clone() else { unreachable!() };
        self.adopted.push((ts.clone(), e));
        if let Some(q) = q {
            let (base, _) = base_sets(program, t, &self.persist);
            self.compare_store(&ts, q, &model.active, &base);
        }
        self.persist = model.carry;
        self.skolem = model.skolem;
        true
    }

    /// Checks an interval phase, refining it at every rational instant where
    /// an atom of the store changes truth. Returns the left limits at its
    /// end, or None when the walk cannot continue.
    fn interval(&mut self, start: &Rational, end: &Rational, segments: &BTreeMap<String, Poly>, at_start: &Valuation, hint: &ModuleSet, q: Option<&QListing>) -> Option<Valuation> {
        let len = end - start;
        let mut cuts: BTreeSet<Rational> = BTreeSet::new();
        for p in self.store_polys(segments) {
            for r in roots_in(&p, &Rational::zero(), Some(&len)) {
                match r {
                    RealRoot::Exact(x) if x < len => {
                        cuts.insert(x);
                    }
                    RealRoot::Exact(_) => {}
                    RealRoot::Irrational { .. } => {
                        if r.cmp_rational(&len).is_lt() {
                            self.fail(Condition::Unsupported, span(start, end), format!("atom changes truth at irrational time near {:.9}", r.approx() + approx(start)));
                            return None;
                        }
                    }
                }
            }
        }
        let mut bounds = vec![Rational::zero()];
        bounds.extend(cuts);
        bounds.push(len.clone());
        let mut init = at_start.clone();
        for (k, w) in bounds.windows(2).enumerate() {
            let (a, b) = (&w[0], &w[1]);
            let local: BTreeMap<String, Poly> = segments.iter().map(|(x, p)| (x.clone(), p.shift(a))).collect();
            let abs_a = start + a;
            let abs_b = start + b;
            if k > 0 {
                let pre = self.sample(segments, a, false);
                let left = self.sample(segments, a, true);
                let past = segments.keys().cloned().collect();
                if !self.point(&abs_a, &pre, &left, &past, None, None) {
                    return None;
                }
                init = pre;
            }
            let hint = if bounds.len() == 2 { Some(hint) } else { None };
            let q = if bounds.len() == 2 { q } else { None };
            if !self.piece(&abs_a, &abs_b, &local, &init, hint, q) {
                return None;
            }
        }
        Some(self.sample(segments, &len, true))
    }

    /// Polynomials of every atom in the store in local time.
    fn store_polys(&self, segments: &BTreeMap<String, Poly>) -> Vec<Poly> {
        let mut out = Vec::new();
        let empty = ConstraintSet::new();
        for m in self.program.defs.keys() {
            let (active, _) = close_at_instant(&ConstraintSet::new(), self.persist.get(m).unwrap_or(&empty));
            for c in &active {
                let mut atoms = Vec::new();
                match c {
                    Constraint::Atom(a) => atoms.push(a.clone()),
                    Constraint::Cond(g, _) => atoms.extend(g.atoms().iter().cloned()),
                    _ => {}
                }
                for a in atoms {
                    let p = atom_poly::<Poly>(&a)
                        .map_symbols(&|s| VarRef::new(s.name.clone(), s.order, false))
                        .substitute(&|s| segments.get(&s.name).map(|p| p.nth_derivative(s.order)));
                    if let Some(c) = p.as_constant() {
                        if !c.is_zero() {
                            out.push(c);
                        }
                    }
                }
            }
        }
        out
    }

    fn piece(&mut self, a: &Rational, b: &Rational, local: &BTreeMap<String, Poly>, init: &Valuation, hint: Option<&ModuleSet>, q: Option<&QListing>) -> bool {
        let program = self.program;
        let ts = span(a, b);
        let mut vars: BTreeSet<String> = program.variables();
        vars.extend(self.skolem.generated());
        let len = b - a;
        let input = IntervalInput { program, start: a, horizon: Some(b), persist: &self.persist, init, variables: &vars, preset: Some(local) };
        let poset = &program.poset;
        let results: Vec<Outcome<IntervalModel>> = poset
            .elements()
            .iter()
            .map(|e| match solve_interval(&input, e) {
                Outcome::Consistent(m) => match throughout(&m, e, &len) {
                    Ok(()) => Outcome::Consistent(m),
                    Err(msg) => Outcome::Inconsistent(msg),
                },
                other => other,
            })
            .collect();
        let ok: Vec<usize> = (0..poset.len()).filter(|&i| matches!(results[i], Outcome::Consistent(_))).collect();
        let maximal: Vec<usize> = ok.iter().copied().filter(|&i| !poset.above(i).iter().any(|j| ok.contains(j))).collect();
        let Some(&chosen) = hint.and_then(|h| poset.index_of(h)).filter(|i| maximal.contains(i)).as_ref().or(maximal.first()) else {
            let why = hint.and_then(|h| poset.index_of(h)).or_else(|| poset.maximal().first().copied()).map(|i| describe(&results[i])).unwrap_or_default();
            self.fail(Condition::Satisfied, ts, format!("no element of the poset holds: {why}"));
            return false;
        };
        if let Some(h) = hint {
            match poset.index_of(h) {
                Some(i) if maximal.contains(&i) => {}
                Some(i) if ok.contains(&i) => self.fail(Condition::Maximal, ts.clone(), format!("{} holds but is not maximal", crate::syntax::poset::fmt_set(h))),
                Some(i) => self.fail(Condition::Satisfied, ts.clone(), format!("{} fails: {}", crate::syntax::poset::fmt_set(h), describe(&results[i]))),
                None => self.fail(Condition::Structure, ts.clone(), format!("{} is not an element of the poset", crate::syntax::poset::fmt_set(h))),
            }
        }
        // (s2) at the midpoint with the whole past frozen
        let mid = (&len) / Rational::from_integer(2.into());
        let left = self.sample(local, &mid, true);
        let past: BTreeSet<String> = local.keys().cloned().collect();
        let t_mid = a + &mid;
        let free = Valuation::new();
        let (persist, skolem) = (self.persist.clone(), self.skolem.clone());
        let pin = PointInput { program, t: &t_mid, persist: &persist, left: &left, past: &past, skolem: &skolem, preset: &free };
        let open = IntervalInput { program, start: a, horizon: Some(b), persist: &persist, init, variables: &vars, preset: None };
        for j in poset.above(chosen) {
            let e = &poset.elements()[j];
            let r = solve_point(&pin, e);
            if matches!(r, Outcome::Consistent(_) | Outcome::Underdetermined(_)) && !solve_interval(&open, e).is_inconsistent() {
                self.fail(Condition::Maximal, ts.clone(), format!("{} is satisfiable with the same history", crate::syntax::poset::fmt_set(&poset.elements()[j])));
            }
        }
        let Outcome::Consistent(model) = results[chosen].clone() else { unreachable!() };
        self.adopted.push((ts.clone(), poset.elements()[chosen].clone()));
        if let Some(q) = q {
            let base: BTreeMap<String, ConstraintSet> = program
                .defs
                .keys()
                .map(|m| (m.clone(), close_at_instant(&ConstraintSet::new(), self.persist.get(m).unwrap_or(&ConstraintSet::new())).0))
                .collect();
            self.compare_store(&ts, q, &model.active, &base);
        }
        self.persist = model.carry;
        true
    }

    /// Compares the certificate's store with the least store built from
    /// the trajectory. `base` is what definitions and inheritance alone give.
    fn compare_store(&mut self, ts: &str, listing: &QListing, built: &BTreeMap<String, ConstraintSet>, base: &BTreeMap<String, ConstraintSet>) {
        let empty = ConstraintSet::new();
        for m in self.program.defs.keys() {
            let mut claimed = ConstraintSet::new();
            for s in listing.get(m).map(Vec::as_slice).unwrap_or(&[]) {
                match parse_constraint(s) {
                    Ok(c) => {
                        claimed.insert(c);
                    }
                    Err(e) => {
                        self.fail(Condition::Structure, ts.to_string(), format!("unreadable constraint in {m}: {e}"));
                        return;
                    }
                }
            }
            let carry = self.cert_carry.get(m).cloned().unwrap_or_default();
            let (closed, next_carry) = close_at_instant(&claimed, &carry);
            if closed != claimed {
                let missing: Vec<String> = closed.difference(&claimed).map(|c| c.to_string()).collect();
                self.fail(Condition::Closure, ts.to_string(), format!("{m} is not closed: lacks {}", missing.join(", ")));
            }
            self.cert_carry.insert(m.clone(), next_carry);
            let want = built.get(m).unwrap_or(&empty);
            for c in want.difference(&claimed) {
                let cond = if base.get(m).is_some_and(|b| b.contains(c)) { Condition::Definitions } else { Condition::Consequents };
                self.fail(cond, ts.to_string(), format!("{m} lacks {c}"));
            }
            // single removals: a removable member contradicts minimality
            let members: Vec<&Constraint> = claimed.iter().collect();
            let step = members.len().div_ceil(MINIMALITY_EXHAUSTIVE).max(1);
            for c in members.iter().step_by(step) {
                let mut fewer = claimed.clone();
                fewer.remove(*c);
                let still_closed = close_at_instant(&fewer, &carry).0 == fewer;
                if still_closed && want.is_subset(&fewer) {
                    self.fail(Condition::Minimal, ts.to_string(), format!("{m} holds {c} without need"));
                }
            }
        }
    }
}

fn approx(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

fn describe<T>(o: &Outcome<T>) -> String {
    match o {
        Outcome::Consistent(_) => "consistent".into(),
        Outcome::Inconsistent(m) | Outcome::Underdetermined(m) | Outcome::Unsupported(m) => m.clone(),
    }
}

/// Relations other than equalities of the element's modules keep their
/// truth over the whole open piece.
fn throughout(m: &IntervalModel, e: &ModuleSet, len: &Rational) -> Result<(), String> {
    for (name, cs) in &m.active {
        if !e.contains(name) {
            continue;
        }
        for c in cs {
            let Constraint::Atom(a) = c else { continue };
            if a.op == Relop::Eq {
                continue;
            }
            let p = atom_poly::<Poly>(a)
                .map_symbols(&|s| VarRef::new(s.name.clone(), s.order, false))
                .substitute(&|s| m.polys.get(&s.name).map(|p| p.nth_derivative(s.order)));
            let Some(p) = p.as_constant() else {
                let missing: Vec<String> = p.symbols().iter().map(symbol_name).collect();
                return Err(format!("no trajectory for {}", missing.join(", ")));
            };
            if let Some(r) = first_truth_change(&p, a.op, Some(len)) {
                if r.cmp_rational(len).is_lt() {
                    return Err(format!("{a} in {name} changes truth inside the piece"));
                }
            }
        }
    }
    Ok(())
}


#[cfg(test)]
mod p2 {
    use super::*;
    use crate::io::certificate_from_json;
    use crate::program::FrameOptions;
    use crate::syntax::ExplicitPoset;

    fn read(name: &str) -> String {
        std::fs::read_to_string(format!("{}/programs/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
    }

    fn program() -> Program {
        let poset: ExplicitPoset = serde_json::from_str(&read("p2.poset.json")).unwrap();
        Program::parse(&read("p2.hydla"), Some(&poset)).unwrap().inject_continuity_defaults(&FrameOptions::default())
    }

    fn check(name: &str) -> Report {
        let certs = certificate_from_json(&read(name)).unwrap();
        verify(&program(), &certs[0])
    }

    fn set(xs: &[&str]) -> ModuleSet {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn cases_accept() {
        let r = check("p2_case1.json");
        assert!(r.accepted(), "{r}");
        assert!(r.adopted.iter().any(|(t, _)| t == "5"), "{r}");
        let r = check("p2_case2.json");
        assert!(r.accepted(), "{r}");
        assert!(r.adopted.contains(&("5".into(), set(&["CONT(x,0)", "CONT(y,0)", "D", "E"]))));
        let r = check("p2_case3.json");
        assert!(r.accepted(), "{r}");
        assert!(r.adopted.contains(&("5".into(), set(&["CONT(y,0)", "D", "F"]))));
    }

    #[test]
    fn corrupted_rejected_by_maximality() {
        let r = check("p2_corrupted.json");
        assert_eq!(r.verdict, Verdict::Reject);
        let f = r.findings.iter().find(|f| f.condition == Condition::Maximal).expect("(s2) finding");
        assert_eq!(f.time, "5");
        assert!(r.findings.iter().all(|f| f.time == "5"), "{r}");
    }
}
