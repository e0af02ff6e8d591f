//! Accumulation of discrete changes: a ratio test on the gaps between
//! point phases and geometric extrapolation of left limits.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};

use crate::constraint::guard::symbol_name;
use crate::constraint::Valuation;
use crate::syntax::VarRef;
use crate::Rational;

/// Accumulation time when the last `window` gaps between consecutive point
/// times shrink by a common ratio `r < 1` (ratios within `tol` of each
/// other). Returns `t_last + gap_last * r / (1 - r)`.
pub fn detect_zeno(times: &[Rational], window: usize, tol: &Rational) -> Option<Rational> {
    if window < 2 || times.len() < window + 1 {
        return None;
    }
    let tail = &times[times.len() - window - 1..];
    let gaps: Vec<Rational> = tail.windows(2).map(|w| &w[1] - &w[0]).collect();
    if gaps.iter().any(|g| !g.is_positive()) {
        return None;
    }
    let ratios: Vec<Rational> = gaps.windows(2).map(|w| &w[1] / &w[0]).collect();
    let r = ratios.last().unwrap().clone();
    if r >= Rational::one() || ratios.iter().any(|x| (x - &r).abs() > *tol) {
        return None;
    }
    let last = tail.last().unwrap();
    Some(last + gaps.last().unwrap() * &r / (Rational::one() - &r))
}

/// Limit of each symbol's sequence of left limits, assuming geometric
/// convergence. Symbols missing from some valuation are dropped.
pub fn extrapolate(history: &[Valuation], tol: &Rational) -> Result<Valuation, String> {
    if history.len() < 3 {
        return Err("too few discrete changes to extrapolate".into());
    }
    let mut syms: BTreeSet<VarRef> = history[0].keys().cloned().collect();
    for h in &history[1..] {
        syms.retain(|s| h.contains_key(s));
    }
    let mut out = Valuation::new();
    for s in syms {
        let seq: Vec<&Rational> = history.iter().map(|h| &h[&s]).collect();
        let diffs: Vec<Rational> = seq.windows(2).map(|w| w[1] - w[0]).collect();
        let last = seq.last().unwrap();
        if diffs.iter().all(Zero::is_zero) {
            out.insert(s, (*last).clone());
            continue;
        }
        if diffs.iter().any(Zero::is_zero) {
            return Err(format!("cannot extrapolate {}", symbol_name(&s)));
        }
        let ratios: Vec<Rational> = diffs.windows(2).map(|w| &w[1] / &w[0]).collect();
        let r = ratios.last().unwrap().clone();
        if r.abs() >= Rational::one() || ratios.iter().any(|x| (x - &r).abs() > *tol) {
            return Err(format!("cannot extrapolate {}", symbol_name(&s)));
        }
        out.insert(s, *last + diffs.last().unwrap() * &r / (Rational::one() - &r));
    }
    Ok(out)
}
