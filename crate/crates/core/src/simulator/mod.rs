//! Phase-based execution: point phases at discrete instants alternate with
//! interval phases of continuous evolution. Each phase adopts a maximal
//! consistent element of the module-set poset.

pub mod zeno;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::Zero;

use crate::constraint::{ConstraintSet, SkolemContext, Valuation};
use crate::program::Program;
use crate::solver::interval::IntervalEnd;
use crate::solver::{find_maximal_consistent, solve_interval, solve_point, IntervalInput, Outcome, PointInput, SearchResult};
use crate::syntax::{ModuleSet, VarRef};
use crate::{Poly, Rational};

pub use zeno::{detect_zeno, extrapolate};

/// Values per variable and derivative order.
pub type Values = BTreeMap<String, BTreeMap<u32, Rational>>;
/// Rendered constraints per module.
pub type QListing = BTreeMap<String, Vec<String>>;

#[derive(Clone, Debug, PartialEq)]
pub struct SimOptions {
    pub until: Rational,
    pub max_phases: usize,
    pub branch_limit: usize,
    /// Number of gaps between point phases inspected by the ratio test.
    pub zeno_window: usize,
    pub zeno_ratio_tol: Rational,
    pub post_zeno: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            until: Rational::from_integer(10.into()),
            max_phases: 100,
            branch_limit: 16,
            zeno_window: 4,
            zeno_ratio_tol: Rational::zero(),
            post_zeno: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointPhase {
    pub time: Rational,
    pub adopted: ModuleSet,
    pub values: Values,
    /// Left limits, recorded only where no interval precedes the point.
    pub left: Option<Values>,
    pub q_additions: QListing,
    pub q_active: QListing,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntervalPhase {
    pub start: Rational,
    pub end: Rational,
    pub adopted: ModuleSet,
    /// Coefficients in local time `t - start`.
    pub segments: BTreeMap<String, Poly>,
    pub q_additions: QListing,
    pub q_active: QListing,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Phase {
    Point(PointPhase),
    Interval(IntervalPhase),
    /// Discrete changes accumulating between two instants; not simulated.
    Accumulation { start: Rational, end: Rational },
}

impl Phase {
    pub fn kind(&self) -> &'static str {
        match self {
            Phase::Point(_) => "point",
            Phase::Interval(_) => "interval",
            Phase::Accumulation { .. } => "accumulation",
        }
    }

    pub fn adopted(&self) -> Option<&ModuleSet> {
        match self {
            Phase::Point(p) => Some(&p.adopted),
            Phase::Interval(i) => Some(&i.adopted),
            Phase::Accumulation { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Status {
    Horizon,
    Zeno { time: Rational },
    NoSolution { time: Rational, reason: String },
    Underdetermined { time: Rational, reason: String },
    Unsupported { time: Rational, reason: String },
    BranchLimit,
    PhaseLimit,
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Horizon => "horizon",
            Status::Zeno { .. } => "zeno",
            Status::NoSolution { .. } => "no_solution",
            Status::Underdetermined { .. } => "underdetermined",
            Status::Unsupported { .. } => "unsupported",
            Status::BranchLimit => "branch_limit",
            Status::PhaseLimit => "phase_limit",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub status: Status,
    pub phases: Vec<Phase>,
    /// Notes such as a failed extrapolation after an accumulation.
    pub diagnostic: Option<String>,
}

impl Branch {
    pub fn points(&self) -> impl Iterator<Item = &PointPhase> {
        self.phases.iter().filter_map(|p| match p {
            Phase::Point(p) => Some(p),
            _ => None,
        })
    }

    pub fn intervals(&self) -> impl Iterator<Item = &IntervalPhase> {
        self.phases.iter().filter_map(|p| match p {
            Phase::Interval(i) => Some(i),
            _ => None,
        })
    }
}

/// Mutable state of one branch between phases.
#[derive(Clone)]
struct State {
    t: Rational,
    persist: BTreeMap<String, ConstraintSet>,
    left: Valuation,
    past: BTreeSet<String>,
    skolem: SkolemContext,
    phases: Vec<Phase>,
    /// Point times since the start or the last accumulation.
    times: Vec<Rational>,
    /// Left limits at each of those point times.
    lefts: Vec<Valuation>,
    left_given: bool,
}

impl State {
    fn initial() -> Self {
        State {
            t: Rational::zero(),
            persist: BTreeMap::new(),
            left: Valuation::new(),
            past: BTreeSet::new(),
            skolem: SkolemContext::new(),
            phases: Vec::new(),
            times: Vec::new(),
            lefts: Vec::new(),
            left_given: false,
        }
    }

    fn finish(self, status: Status, diagnostic: Option<String>) -> Branch {
        Branch { status, phases: self.phases, diagnostic }
    }
}

pub fn render_sets(sets: &BTreeMap<String, ConstraintSet>) -> QListing {
    sets.iter().map(|(m, cs)| (m.clone(), cs.iter().map(|c| c.to_string()).collect())).collect()
}

pub fn values_of(val: &Valuation) -> Values {
    let mut out = Values::new();
    for (s, v) in val {
        out.entry(s.name.clone()).or_default().insert(s.order, v.clone());
    }
    out
}

fn left_values_of(val: &Valuation) -> Values {
    let mut out = Values::new();
    for (s, v) in val.iter().filter(|(s, _)| s.prev) {
        out.entry(s.name.clone()).or_default().insert(s.order, v.clone());
    }
    out
}

/// Left limits at the end of a segment for orders up to one past the
/// highest order the program uses.
fn left_limits(program: &Program, segments: &BTreeMap<String, Poly>, tau: &Rational) -> Valuation {
    let mut out = Valuation::new();
    for (x, p) in segments {
        for k in 0..=program.max_order(x) + 1 {
            out.insert(VarRef::new(x.clone(), k, true), p.nth_derivative(k).eval(tau));
        }
    }
    out
}

enum Step<T> {
    Go(Vec<(ModuleSet, T)>),
    Stop(Status),
}

fn search<T>(poset: &crate::syntax::ModuleSetPoset, t: &Rational, check: impl Fn(&ModuleSet) -> Outcome<T>) -> Step<T> {
    let mut reasons: Vec<String> = Vec::new();
    let r = find_maximal_consistent(poset, |e| {
        let o = check(e);
        if let Outcome::Inconsistent(msg) = &o {
            if !reasons.contains(msg) {
                reasons.push(msg.clone());
            }
        }
        o
    });
    match r {
        SearchResult::Found(v) => Step::Go(v),
        SearchResult::NoSolution(_) => Step::Stop(Status::NoSolution { time: t.clone(), reason: reasons.join("; ") }),
        SearchResult::Underdetermined(_, d) => Step::Stop(Status::Underdetermined { time: t.clone(), reason: d }),
        SearchResult::Unsupported(_, d) => Step::Stop(Status::Unsupported { time: t.clone(), reason: d }),
    }
}

/// Runs every branch to a terminal status. Branches are explored
/// breadth-first; forks beyond `branch_limit` end with `BranchLimit`.
pub fn simulate(program: &Program, opts: &SimOptions) -> Vec<Branch> {
    let mut done: Vec<Branch> = Vec::new();
    let mut queue: VecDeque<State> = VecDeque::from([State::initial()]);
    let mut live = 1usize;
    while let Some(mut st) = queue.pop_front() {
        loop {
            if st.phases.len() >= opts.max_phases {
                done.push(st.finish(Status::PhaseLimit, None));
                break;
            }
            // point phase at st.t
            let empty = Valuation::new();
            let input = PointInput { program, t: &st.t, persist: &st.persist, left: &st.left, past: &st.past, skolem: &st.skolem, preset: &empty };
            let found = match search(&program.poset, &st.t, |e| solve_point(&input, e)) {
                Step::Go(v) => v,
                Step::Stop(s) => {
                    done.push(st.finish(s, None));
                    break;
                }
            };
            let mut outcomes = found.into_iter();
            let (adopted, model) = outcomes.next().unwrap();
            for (e2, m2) in outcomes {
                let mut fork = st.clone();
                fork.phases.push(point_phase(&st, e2, &m2));
                if live >= opts.branch_limit {
                    done.push(fork.finish(Status::BranchLimit, None));
                } else {
                    live += 1;
                    advance_point(&mut fork, m2);
                    queue.push_back(fork);
                }
            }
            st.phases.push(point_phase(&st, adopted, &model));
            advance_point(&mut st, model);

            if let Some(acc) = detect_zeno(&st.times, opts.zeno_window, &opts.zeno_ratio_tol) {
                if !opts.post_zeno || acc > opts.until {
                    done.push(st.finish(Status::Zeno { time: acc }, None));
                    break;
                }
                let k = opts.zeno_window;
                let hist = &st.lefts[st.lefts.len().saturating_sub(k)..];
                match extrapolate(hist, &opts.zeno_ratio_tol) {
                    Ok(limit) => {
                        st.phases.push(Phase::Accumulation { start: st.t.clone(), end: acc.clone() });
                        st.t = acc;
                        st.left = limit;
                        st.left_given = true;
                        st.times.clear();
                        st.lefts.clear();
                        continue;
                    }
                    Err(msg) => {
                        done.push(st.finish(Status::Zeno { time: acc }, Some(msg)));
                        break;
                    }
                }
            }
            if st.t >= opts.until {
                done.push(st.finish(Status::Horizon, None));
                break;
            }
            if st.phases.len() >= opts.max_phases {
                done.push(st.finish(Status::PhaseLimit, None));
                break;
            }

            // interval phase from st.t
            let Some(Phase::Point(last)) = st.phases.last() else { unreachable!() };
            let init: Valuation = last.values.iter().flat_map(|(x, m)| m.iter().map(move |(k, v)| (VarRef::new(x.clone(), *k, false), v.clone()))).collect();
            let vars: BTreeSet<String> = {
                let mut v = program.variables();
                v.extend(st.skolem.generated());
                v
            };
            let iin = IntervalInput { program, start: &st.t, horizon: Some(&opts.until), persist: &st.persist, init: &init, variables: &vars, preset: None };
            let found = match search(&program.poset, &st.t, |e| solve_interval(&iin, e)) {
                Step::Go(v) => v,
                Step::Stop(s) => {
                    done.push(st.finish(s, None));
                    break;
                }
            };
            let mut outcomes = found.into_iter();
            let (adopted, model) = outcomes.next().unwrap();
            let mut forks = Vec::new();
            for (e2, m2) in outcomes {
                let mut fork = st.clone();
                if live >= opts.branch_limit {
                    if let Some(end) = m2.end.time() {
                        fork.phases.push(interval_phase(&fork.t, end, e2, &m2));
                    }
                    done.push(fork.finish(Status::BranchLimit, None));
                } else {
                    live += 1;
                    forks.push((fork, e2, m2));
                }
            }
            let mut cont = vec![(st, adopted, model)];
            cont.extend(forks);
            let mut next: Option<State> = None;
            for (mut s, e, m) in cont {
                match advance_interval(program, &mut s, e, m, opts) {
                    None => {
                        if next.is_none() {
                            next = Some(s);
                        } else {
                            queue.push_back(s);
                        }
                    }
                    Some(status) => done.push(s.finish(status, None)),
                }
            }
            match next {
                Some(s) => st = s,
                None => break,
            }
        }
    }
    done
}

fn point_phase(st: &State, adopted: ModuleSet, m: &crate::solver::PointModel) -> Phase {
    Phase::Point(PointPhase {
        time: st.t.clone(),
        adopted,
        values: values_of(&m.values),
        left: if st.left_given { Some(left_values_of(&st.left)) } else { None },
        q_additions: render_sets(&m.additions),
        q_active: render_sets(&m.active),
    })
}

fn advance_point(st: &mut State, m: crate::solver::PointModel) {
    st.times.push(st.t.clone());
    st.lefts.push(std::mem::take(&mut st.left));
    st.left_given = false;
    st.persist = m.carry;
    st.skolem = m.skolem;
}

fn interval_phase(start: &Rational, end: &Rational, adopted: ModuleSet, m: &crate::solver::IntervalModel) -> Phase {
    Phase::Interval(IntervalPhase {
        start: start.clone(),
        end: end.clone(),
        adopted,
        segments: m.polys.clone(),
        q_additions: render_sets(&m.additions),
        q_active: render_sets(&m.active),
    })
}

/// Records the interval and moves to its end. Returns a terminal status
/// when the branch stops there.
fn advance_interval(program: &Program, st: &mut State, adopted: ModuleSet, m: crate::solver::IntervalModel, opts: &SimOptions) -> Option<Status> {
    let end = match &m.end {
        IntervalEnd::Event(t) | IntervalEnd::Horizon(t) => t.clone(),
        IntervalEnd::Irrational(r) => {
            return Some(Status::Unsupported { time: st.t.clone(), reason: format!("next event at irrational time near {:.9}", r.approx()) });
        }
        IntervalEnd::Unbounded => opts.until.clone(),
    };
    st.phases.push(interval_phase(&st.t, &end, adopted, &m));
    if matches!(m.end, IntervalEnd::Horizon(_)) {
        return Some(Status::Horizon);
    }
    let tau = &end - &st.t;
    st.left = left_limits(program, &m.polys, &tau);
    st.past = m.polys.keys().cloned().collect();
    st.persist = m.carry;
    st.t = end;
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::FrameOptions;
    use crate::scalar::Scalar;

    const BALL: &str = "INIT <=> ht = 10 & ht' = 0.
PARAMS <=> [](g = 9.8 & c = 0.5).
FALL <=> [](ht'' = -g).
BOUNCE <=> [](ht- = 0 => ht' = -c * (ht'-)).
INIT, PARAMS, (FALL << BOUNCE).";

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn ball() -> Program {
        Program::parse(BALL, None).unwrap().inject_continuity_defaults(&FrameOptions::default())
    }

    #[test]
    fn ball_bounce_times() {
        let opts = SimOptions { until: q(4, 1), ..SimOptions::default() };
        let b = simulate(&ball(), &opts);
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].status, Status::Horizon);
        let times: Vec<Rational> = b[0].points().map(|p| p.time.clone()).collect();
        assert_eq!(times, vec![q(0, 1), q(10, 7), q(20, 7), q(25, 7), q(55, 14)]);
        let v: Vec<Rational> = b[0].points().skip(1).map(|p| p.values["ht"][&1].clone()).collect();
        assert_eq!(v, vec![q(7, 1), q(7, 2), q(7, 4), q(7, 8)]);
    }

    #[test]
    fn ball_zeno() {
        let opts = SimOptions { until: q(10, 1), max_phases: 40, ..SimOptions::default() };
        let b = simulate(&ball(), &opts);
        assert_eq!(b[0].status, Status::Zeno { time: q(30, 7) });
    }
}
