//! Sampled CSV view of a trace. Values are rounded decimals, so the view
//! is lossy; the JSON document is the exact record.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::simulator::{Branch, Phase};
use crate::Rational;

/// Rounds half away from zero to `precision` fractional digits.
pub fn decimal(r: &Rational, precision: usize) -> String {
    let scale = BigInt::from(10).pow(precision as u32);
    let scaled = (r * Rational::from_integer(scale.clone())).round().to_integer();
    let neg = scaled.is_negative();
    let digits = scaled.abs().to_string();
    let s = if precision == 0 {
        digits
    } else {
        let padded = format!("{:0>width$}", digits, width = precision + 1);
        let (int, frac) = padded.split_at(padded.len() - precision);
        format!("{int}.{frac}")
    };
    if neg {
        format!("-{s}")
    } else {
        s
    }
}

fn variables(branches: &[Branch]) -> Vec<String> {
    let mut vars = BTreeSet::new();
    for b in branches {
        for p in &b.phases {
            match p {
                Phase::Point(p) => vars.extend(p.values.keys().cloned()),
                Phase::Interval(i) => vars.extend(i.segments.keys().cloned()),
                Phase::Accumulation { .. } => {}
            }
        }
    }
    vars.into_iter().collect()
}

/// Header `t,vars...`, then per branch one row per multiple of `step`
/// inside an interval and one row per point phase. Branches after the
/// first are introduced by a `# branch i` line.
pub fn emit_csv(branches: &[Branch], step: &Rational, precision: usize) -> String {
    assert!(step > &Rational::zero(), "step must be positive");
    let vars = variables(branches);
    let mut out = String::from("t");
    for v in &vars {
        out.push(',');
        out.push_str(v);
    }
    out.push('\n');
    for (bi, b) in branches.iter().enumerate() {
        if branches.len() > 1 {
            out.push_str(&format!("# branch {bi}\n"));
        }
        for p in &b.phases {
            match p {
                Phase::Point(p) => {
                    let cells = vars.iter().map(|x| p.values.get(x).and_then(|m| m.get(&0)).map(|v| decimal(v, precision)).unwrap_or_default());
                    row(&mut out, &p.time, cells, precision);
                }
                Phase::Interval(i) => {
                    let mut k = (&i.start / step).floor() + Rational::from_integer(1.into());
                    loop {
                        let t = &k * step;
                        if t >= i.end {
                            break;
                        }
                        if t > i.start {
                            let tau = &t - &i.start;
                            let cells = vars.iter().map(|x| i.segments.get(x).map(|s| decimal(&s.eval(&tau), precision)).unwrap_or_default());
                            row(&mut out, &t, cells, precision);
                        }
                        k += Rational::from_integer(1.into());
                    }
                }
                Phase::Accumulation { .. } => {}
            }
        }
    }
    out
}

fn row(out: &mut String, t: &Rational, cells: impl Iterator<Item = String>, precision: usize) {
    out.push_str(&decimal(t, precision));
    for c in cells {
        out.push(',');
        out.push_str(&c);
    }
    out.push('\n');
}
