//! Exact piecewise-polynomial trajectories.

use std::collections::BTreeMap;

use num_traits::Zero;
use thiserror::Error;

use crate::roots::{first_truth_change, RealRoot};
use crate::syntax::Relop;
use crate::{Poly, Rational};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TrajectoryError {
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("{var} is not defined at t = {t}")]
    OutOfRange { var: String, t: Rational },
    #[error("{var} is not differentiable {order} times at t = {t}")]
    NotDifferentiable { var: String, order: u32, t: Rational },
    #[error("no left limit at the initial time")]
    NoLeftLimitAtZero,
}

/// A polynomial in local time `τ = t - start`, valid on `(start, end)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub start: Rational,
    pub end: Option<Rational>,
    pub poly: Poly,
}

impl Segment {
    fn contains_open(&self, t: &Rational) -> bool {
        *t > self.start && self.end.as_ref().is_none_or(|e| t < e)
    }

    fn covers_left_of(&self, t: &Rational) -> bool {
        *t > self.start && self.end.as_ref().is_none_or(|e| t <= e)
    }

    pub fn value(&self, order: u32, t: &Rational) -> Rational {
        self.poly.nth_derivative(order).eval(&(t - &self.start))
    }
}

/// One variable: contiguous segments plus explicitly stored point values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VarTrajectory {
    pub segments: Vec<Segment>,
    pub points: BTreeMap<Rational, BTreeMap<u32, Rational>>,
}

impl VarTrajectory {
    pub fn push_segment(&mut self, seg: Segment) {
        self.segments.push(seg);
    }

    pub fn set_point(&mut self, t: Rational, order: u32, v: Rational) {
        self.points.entry(t).or_default().insert(order, v);
    }

    pub fn first_time(&self) -> Option<&Rational> {
        let s = self.segments.first().map(|s| &s.start);
        let p = self.points.keys().next();
        match (s, p) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PiecewisePoly {
    pub vars: BTreeMap<String, VarTrajectory>,
}

impl PiecewisePoly {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var_mut(&mut self, name: &str) -> &mut VarTrajectory {
        self.vars.entry(name.to_string()).or_default()
    }

    fn var(&self, name: &str) -> Result<&VarTrajectory, TrajectoryError> {
        self.vars.get(name).ok_or_else(|| TrajectoryError::UnknownVariable(name.to_string()))
    }

    /// Value of the `order`-th derivative at `t`. Stored point values win;
    /// at a segment boundary the derivative must agree from both sides
    /// (only the right side counts at the variable's first instant).
    pub fn eval(&self, var: &str, order: u32, t: &Rational) -> Result<Rational, TrajectoryError> {
        let v = self.var(var)?;
        if let Some(x) = v.points.get(t).and_then(|m| m.get(&order)) {
            return Ok(x.clone());
        }
        if let Some(s) = v.segments.iter().find(|s| s.contains_open(t)) {
            return Ok(s.value(order, t));
        }
        let right = v.segments.iter().find(|s| s.start == *t).map(|s| s.value(order, t));
        let left = v.segments.iter().find(|s| s.end.as_ref() == Some(t)).map(|s| s.value(order, t));
        match (left, right) {
            (Some(l), Some(r)) if l == r => Ok(r),
            (None, Some(r)) if v.first_time() == Some(t) => Ok(r),
            (Some(_), Some(_)) => Err(TrajectoryError::NotDifferentiable { var: var.to_string(), order, t: t.clone() }),
            _ => Err(TrajectoryError::OutOfRange { var: var.to_string(), t: t.clone() }),
        }
    }

    /// Limit from below of the `order`-th derivative at `t`.
    pub fn left_limit(&self, var: &str, order: u32, t: &Rational) -> Result<Rational, TrajectoryError> {
        if t.is_zero() {
            return Err(TrajectoryError::NoLeftLimitAtZero);
        }
        let v = self.var(var)?;
        v.segments
            .iter()
            .find(|s| s.covers_left_of(t))
            .map(|s| s.value(order, t))
            .ok_or_else(|| TrajectoryError::OutOfRange { var: var.to_string(), t: t.clone() })
    }

    /// Right-hand derivative of the segment starting at or covering `t`.
    pub fn right_value(&self, var: &str, order: u32, t: &Rational) -> Result<Rational, TrajectoryError> {
        let v = self.var(var)?;
        v.segments
            .iter()
            .find(|s| s.start == *t || s.contains_open(t))
            .map(|s| s.value(order, t))
            .ok_or_else(|| TrajectoryError::OutOfRange { var: var.to_string(), t: t.clone() })
    }

    /// Segment polynomial covering the open interval starting at `t`,
    /// re-based to local time at `t`.
    pub fn segment_from(&self, var: &str, t: &Rational) -> Option<Poly> {
        let v = self.vars.get(var)?;
        v.segments.iter().find(|s| s.start == *t || s.contains_open(t)).map(|s| s.poly.shift(&(t - &s.start)))
    }
}

/// Antiderivative with value `init` at local time 0.
pub fn integrate_poly(p: &Poly, init: Rational) -> Poly {
    p.integrate(init)
}

#[derive(Clone, Debug, PartialEq)]
pub enum SignChange {
    None,
    /// The relation holds for every `t`: zero polynomial under `=`, `<=`, `>=`.
    IdenticallyTrue,
    At(RealRoot),
}

/// Smallest `t > from` where the truth of `p(t) op 0` departs from its value
/// just after `from`. `p` is in absolute time.
pub fn earliest_sign_change(p: &Poly, from: &Rational, op: Relop, until: Option<&Rational>) -> SignChange {
    if p.is_zero() {
        return if op.holds(std::cmp::Ordering::Equal) { SignChange::IdenticallyTrue } else { SignChange::None };
    }
    let local = p.shift(from);
    let horizon = until.map(|u| u - from);
    match first_truth_change(&local, op, horizon.as_ref()) {
        None => SignChange::None,
        Some(RealRoot::Exact(r)) => SignChange::At(RealRoot::Exact(r + from)),
        Some(RealRoot::Irrational { poly, lo, hi }) => SignChange::At(RealRoot::Irrational { poly: poly.shift(&-from.clone()), lo: lo + from, hi: hi + from }),
    }
}
