//! JSON trace documents. Rationals travel as `{"d": "..", "n": ".."}`
//! strings so no precision is lost; fields and maps are sorted so equal
//! traces serialize to identical bytes.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::checker::Certificate;
use crate::simulator::{Branch, IntervalPhase, Phase, PointPhase, QListing, SimOptions, Status, Values};
use crate::{Poly, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Q {
    pub d: String,
    pub n: String,
}

impl From<&Rational> for Q {
    fn from(r: &Rational) -> Self {
        Q { d: r.denom().to_string(), n: r.numer().to_string() }
    }
}

impl Q {
    pub fn to_rational(&self) -> Result<Rational, String> {
        let n: BigInt = self.n.parse().map_err(|_| format!("bad numerator {:?}", self.n))?;
        let d: BigInt = self.d.parse().map_err(|_| format!("bad denominator {:?}", self.d))?;
        if d.is_zero() {
            return Err("zero denominator".into());
        }
        Ok(Rational::new(n, d))
    }
}

/// Variable, then derivative order written as a decimal string.
pub type ValuesDoc = BTreeMap<String, BTreeMap<String, Q>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptionsDoc {
    pub branch_limit: usize,
    pub max_phases: usize,
    pub post_zeno: bool,
    pub until: Q,
    pub zeno_ratio_tol: Q,
    pub zeno_window: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatusDoc {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<Q>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhaseDoc {
    Accumulation {
        end: Q,
        start: Q,
    },
    Interval {
        adopted: Vec<String>,
        end: Q,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q_active: Option<QListing>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q_additions: Option<QListing>,
        /// Coefficients in local time, constant term first.
        segments: BTreeMap<String, Vec<Q>>,
        start: Q,
    },
    Point {
        adopted: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        left: Option<ValuesDoc>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q_active: Option<QListing>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q_additions: Option<QListing>,
        time: Q,
        values: ValuesDoc,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
    pub phases: Vec<PhaseDoc>,
    pub status: StatusDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceDocument {
    pub branches: Vec<BranchDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<OptionsDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program_hash: Option<String>,
}

impl TraceDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }
}

pub fn program_hash(source: &str) -> String {
    Sha256::digest(source.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn values_doc(v: &Values) -> ValuesDoc {
    v.iter().map(|(x, m)| (x.clone(), m.iter().map(|(k, r)| (k.to_string(), Q::from(r))).collect())).collect()
}

fn values_from(v: &ValuesDoc) -> Result<Values, String> {
    v.iter().map(|(x, m)| Ok((x.clone(), m.iter().map(|(k, q)| Ok((k.parse::<u32>().map_err(|_| format!("bad derivative order {k:?}"))?, q.to_rational()?))).collect::<Result<_, String>>()?))).collect()
}

fn non_empty(q: &QListing) -> Option<QListing> {
    if q.is_empty() {
        None
    } else {
        Some(q.clone())
    }
}

fn phase_doc(p: &Phase) -> PhaseDoc {
    match p {
        Phase::Point(p) => PhaseDoc::Point {
            adopted: p.adopted.iter().cloned().collect(),
            left: p.left.as_ref().map(values_doc),
            q_active: non_empty(&p.q_active),
            q_additions: non_empty(&p.q_additions),
            time: Q::from(&p.time),
            values: values_doc(&p.values),
        },
        Phase::Interval(i) => PhaseDoc::Interval {
            adopted: i.adopted.iter().cloned().collect(),
            end: Q::from(&i.end),
            q_active: non_empty(&i.q_active),
            q_additions: non_empty(&i.q_additions),
            segments: i.segments.iter().map(|(x, p)| (x.clone(), p.coeffs().iter().map(Q::from).collect())).collect(),
            start: Q::from(&i.start),
        },
        Phase::Accumulation { start, end } => PhaseDoc::Accumulation { end: Q::from(end), start: Q::from(start) },
    }
}

fn phase_from(p: &PhaseDoc) -> Result<Phase, String> {
    Ok(match p {
        PhaseDoc::Point { adopted, left, q_active, q_additions, time, values } => Phase::Point(PointPhase {
            time: time.to_rational()?,
            adopted: adopted.iter().cloned().collect(),
            values: values_from(values)?,
            left: left.as_ref().map(values_from).transpose()?,
            q_additions: q_additions.clone().unwrap_or_default(),
            q_active: q_active.clone().unwrap_or_default(),
        }),
        PhaseDoc::Interval { adopted, end, q_active, q_additions, segments, start } => Phase::Interval(IntervalPhase {
            start: start.to_rational()?,
            end: end.to_rational()?,
            adopted: adopted.iter().cloned().collect(),
            segments: segments
                .iter()
                .map(|(x, cs)| Ok((x.clone(), Poly::new(cs.iter().map(Q::to_rational).collect::<Result<_, _>>()?))))
                .collect::<Result<_, String>>()?,
            q_additions: q_additions.clone().unwrap_or_default(),
            q_active: q_active.clone().unwrap_or_default(),
        }),
        PhaseDoc::Accumulation { end, start } => Phase::Accumulation { start: start.to_rational()?, end: end.to_rational()? },
    })
}

fn status_doc(s: &Status) -> StatusDoc {
    let (time, reason) = match s {
        Status::Zeno { time } => (Some(Q::from(time)), None),
        Status::NoSolution { time, reason } | Status::Underdetermined { time, reason } | Status::Unsupported { time, reason } => (Some(Q::from(time)), Some(reason.clone())),
        _ => (None, None),
    };
    StatusDoc { kind: s.name().into(), reason, time }
}

fn status_from(s: &StatusDoc) -> Result<Status, String> {
    let time = || s.time.as_ref().ok_or_else(|| format!("status {} needs a time", s.kind))?.to_rational();
    let reason = || s.reason.clone().unwrap_or_default();
    Ok(match s.kind.as_str() {
        "horizon" => Status::Horizon,
        "zeno" => Status::Zeno { time: time()? },
        "no_solution" => Status::NoSolution { time: time()?, reason: reason() },
        "underdetermined" => Status::Underdetermined { time: time()?, reason: reason() },
        "unsupported" => Status::Unsupported { time: time()?, reason: reason() },
        "branch_limit" => Status::BranchLimit,
        "phase_limit" => Status::PhaseLimit,
        other => return Err(format!("unknown status {other:?}")),
    })
}

pub fn to_document(source: &str, opts: &SimOptions, branches: &[Branch]) -> TraceDocument {
    TraceDocument {
        branches: branches
            .iter()
            .map(|b| BranchDoc { diagnostic: b.diagnostic.clone(), phases: b.phases.iter().map(phase_doc).collect(), status: status_doc(&b.status) })
            .collect(),
        options: Some(OptionsDoc {
            branch_limit: opts.branch_limit,
            max_phases: opts.max_phases,
            post_zeno: opts.post_zeno,
            until: Q::from(&opts.until),
            zeno_ratio_tol: Q::from(&opts.zeno_ratio_tol),
            zeno_window: opts.zeno_window,
        }),
        program_hash: Some(program_hash(source)),
    }
}

pub fn from_document(doc: &TraceDocument) -> Result<Vec<Branch>, String> {
    doc.branches
        .iter()
        .map(|b| {
            Ok(Branch {
                status: status_from(&b.status)?,
                phases: b.phases.iter().map(phase_from).collect::<Result<_, _>>()?,
                diagnostic: b.diagnostic.clone(),
            })
        })
        .collect()
}

/// One certificate per branch of a trace document.
pub fn certificate_from_json(text: &str) -> Result<Vec<Certificate>, String> {
    let doc = TraceDocument::from_json(text)?;
    Ok(from_document(&doc)?.iter().map(Certificate::from_branch).collect())
}
