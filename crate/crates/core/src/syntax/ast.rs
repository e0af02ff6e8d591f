use std::collections::BTreeSet;
use std::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::Rational;

/// A variable occurrence: name, derivative order and left-limit flag.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarRef {
    pub name: String,
    pub order: u32,
    pub prev: bool,
}

impl VarRef {
    pub fn new(name: impl Into<String>, order: u32, prev: bool) -> Self {
        VarRef { name: name.into(), order, prev }
    }

    pub fn plain(name: impl Into<String>) -> Self {
        Self::new(name, 0, false)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Num(Rational),
    Var(VarRef),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    /// Time derivative of a compound expression.
    Deriv(Box<Expr>),
    /// Left limit of a compound expression.
    Prev(Box<Expr>),
}

impl Expr {
    pub fn num(v: Rational) -> Self {
        Expr::Num(v)
    }

    pub fn int(v: i64) -> Self {
        Expr::Num(Rational::from_integer(v.into()))
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expr::Var(VarRef::plain(name))
    }

    /// Negation; literals absorb the sign.
    pub fn neg(e: Expr) -> Self {
        match e {
            Expr::Num(v) => Expr::Num(-v),
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Self {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    /// Applies `'`; variables carry the order directly.
    pub fn deriv(e: Expr) -> Self {
        match e {
            Expr::Var(mut v) => {
                v.order += 1;
                Expr::Var(v)
            }
            other => Expr::Deriv(Box::new(other)),
        }
    }

    /// Applies the left-limit postfix. `None` when it is already applied.
    pub fn prev(e: Expr) -> Option<Self> {
        match e {
            Expr::Var(v) if v.prev => None,
            Expr::Var(mut v) => {
                v.prev = true;
                Some(Expr::Var(v))
            }
            Expr::Prev(_) => None,
            other => Some(Expr::Prev(Box::new(other))),
        }
    }

    pub fn visit_vars<'a>(&'a self, f: &mut impl FnMut(&'a VarRef)) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => f(v),
            Expr::Neg(e) | Expr::Deriv(e) | Expr::Prev(e) => e.visit_vars(f),
            Expr::Bin(_, a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
        }
    }

    pub fn rename_var(&self, from: &str, to: &str) -> Expr {
        match self {
            Expr::Num(_) => self.clone(),
            Expr::Var(v) if v.name == from => Expr::Var(VarRef { name: to.to_string(), ..v.clone() }),
            Expr::Var(_) => self.clone(),
            Expr::Neg(e) => Expr::Neg(Box::new(e.rename_var(from, to))),
            Expr::Deriv(e) => Expr::Deriv(Box::new(e.rename_var(from, to))),
            Expr::Prev(e) => Expr::Prev(Box::new(e.rename_var(from, to))),
            Expr::Bin(op, a, b) => Expr::bin(*op, a.rename_var(from, to), b.rename_var(from, to)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relop {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Relop {
    pub fn symbol(self) -> &'static str {
        match self {
            Relop::Eq => "=",
            Relop::Ne => "!=",
            Relop::Lt => "<",
            Relop::Le => "<=",
            Relop::Gt => ">",
            Relop::Ge => ">=",
        }
    }

    /// Truth of `v relop 0` given the sign of `v`.
    pub fn holds(self, sign: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            Relop::Eq => sign == Equal,
            Relop::Ne => sign != Equal,
            Relop::Lt => sign == Less,
            Relop::Le => sign != Greater,
            Relop::Gt => sign == Greater,
            Relop::Ge => sign != Less,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub lhs: Expr,
    pub op: Relop,
    pub rhs: Expr,
}

impl Atom {
    pub fn new(lhs: Expr, op: Relop, rhs: Expr) -> Self {
        Atom { lhs, op, rhs }
    }

    pub fn visit_vars<'a>(&'a self, f: &mut impl FnMut(&'a VarRef)) {
        self.lhs.visit_vars(f);
        self.rhs.visit_vars(f);
    }

    pub fn rename_var(&self, from: &str, to: &str) -> Atom {
        Atom::new(self.lhs.rename_var(from, to), self.op, self.rhs.rename_var(from, to))
    }

    pub fn mentions_left_limit(&self) -> bool {
        let mut found = false;
        let mut prev_node = false;
        self.visit_vars(&mut |v| found |= v.prev);
        for e in [&self.lhs, &self.rhs] {
            prev_node |= has_prev_node(e);
        }
        found || prev_node
    }

    /// Highest derivative order mentioned.
    pub fn max_order(&self) -> u32 {
        let mut m = 0;
        for e in [&self.lhs, &self.rhs] {
            m = m.max(expr_max_order(e, 0));
        }
        m
    }
}

fn has_prev_node(e: &Expr) -> bool {
    match e {
        Expr::Prev(_) => true,
        Expr::Num(_) | Expr::Var(_) => false,
        Expr::Neg(a) | Expr::Deriv(a) => has_prev_node(a),
        Expr::Bin(_, a, b) => has_prev_node(a) || has_prev_node(b),
    }
}

fn expr_max_order(e: &Expr, extra: u32) -> u32 {
    match e {
        Expr::Num(_) => 0,
        Expr::Var(v) => v.order + extra,
        Expr::Neg(a) | Expr::Prev(a) => expr_max_order(a, extra),
        Expr::Deriv(a) => expr_max_order(a, extra + 1),
        Expr::Bin(_, a, b) => expr_max_order(a, extra).max(expr_max_order(b, extra)),
    }
}

/// Conjunction of atomic constraints, kept sorted and deduplicated.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Guard(Vec<Atom>);

impl Guard {
    pub fn new(atoms: impl IntoIterator<Item = Atom>) -> Self {
        let set: BTreeSet<Atom> = atoms.into_iter().collect();
        Guard(set.into_iter().collect())
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.0
    }

    pub fn rename_var(&self, from: &str, to: &str) -> Guard {
        Guard::new(self.0.iter().map(|a| a.rename_var(from, to)))
    }
}

/// Constraint tree. Conjunctions are sets: flattened, sorted, deduplicated
/// and never singleton.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Constraint {
    Atom(Atom),
    Conj(Vec<Constraint>),
    Cond(Guard, Box<Constraint>),
    Always(Box<Constraint>),
    Exists(String, Box<Constraint>),
}

impl Constraint {
    pub fn conj(items: impl IntoIterator<Item = Constraint>) -> Constraint {
        let mut set = BTreeSet::new();
        for c in items {
            match c {
                Constraint::Conj(inner) => set.extend(inner),
                other => {
                    set.insert(other);
                }
            }
        }
        if set.len() == 1 {
            set.into_iter().next().unwrap()
        } else {
            Constraint::Conj(set.into_iter().collect())
        }
    }

    pub fn always(c: Constraint) -> Constraint {
        Constraint::Always(Box::new(c))
    }

    pub fn cond(g: Guard, c: Constraint) -> Constraint {
        Constraint::Cond(g, Box::new(c))
    }

    pub fn exists(name: impl Into<String>, c: Constraint) -> Constraint {
        Constraint::Exists(name.into(), Box::new(c))
    }

    /// View as a set of non-conjunction members.
    pub fn members(&self) -> BTreeSet<Constraint> {
        match self {
            Constraint::Conj(items) => items.iter().cloned().collect(),
            other => BTreeSet::from([other.clone()]),
        }
    }

    /// Renames free occurrences of a variable.
    pub fn rename_var(&self, from: &str, to: &str) -> Constraint {
        match self {
            Constraint::Atom(a) => Constraint::Atom(a.rename_var(from, to)),
            Constraint::Conj(items) => Constraint::conj(items.iter().map(|c| c.rename_var(from, to))),
            Constraint::Cond(g, c) => Constraint::cond(g.rename_var(from, to), c.rename_var(from, to)),
            Constraint::Always(c) => Constraint::always(c.rename_var(from, to)),
            Constraint::Exists(x, _) if x == from => self.clone(),
            Constraint::Exists(x, c) => Constraint::exists(x.clone(), c.rename_var(from, to)),
        }
    }

    /// Every atom in the tree, guards included.
    pub fn visit_atoms<'a>(&'a self, f: &mut impl FnMut(&'a Atom, AtomRole)) {
        match self {
            Constraint::Atom(a) => f(a, AtomRole::Body),
            Constraint::Conj(items) => items.iter().for_each(|c| c.visit_atoms(f)),
            Constraint::Cond(g, c) => {
                g.atoms().iter().for_each(|a| f(a, AtomRole::Guard));
                c.visit_atoms(f);
            }
            Constraint::Always(c) | Constraint::Exists(_, c) => c.visit_atoms(f),
        }
    }

    /// Names bound by `∃` anywhere in the tree.
    pub fn bound_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Constraint::Atom(_) => {}
            Constraint::Conj(items) => items.iter().for_each(|c| c.bound_names(out)),
            Constraint::Cond(_, c) | Constraint::Always(c) => c.bound_names(out),
            Constraint::Exists(x, c) => {
                out.insert(x.clone());
                c.bound_names(out);
            }
        }
    }

    pub fn contains_conditional(&self) -> bool {
        match self {
            Constraint::Atom(_) => false,
            Constraint::Conj(items) => items.iter().any(|c| c.contains_conditional()),
            Constraint::Cond(..) => true,
            Constraint::Always(c) | Constraint::Exists(_, c) => c.contains_conditional(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AtomRole {
    Guard,
    Body,
}

// ---------------------------------------------------------------------------
// Pretty printing. The output re-parses to the same tree.

const PREC_SUM: u8 = 1;
const PREC_PROD: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POSTFIX: u8 = 4;

/// Finite decimal rendering when the denominator is of the form 2^a 5^b.
pub fn decimal_string(v: &Rational) -> Option<String> {
    let mut den = v.denom().clone();
    let two = num_bigint::BigInt::from(2);
    let five = num_bigint::BigInt::from(5);
    let (mut a, mut b) = (0u32, 0u32);
    while den.is_even() {
        den /= &two;
        a += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        b += 1;
    }
    if !den.is_one() {
        return None;
    }
    let k = a.max(b);
    if k == 0 {
        return Some(v.numer().to_string());
    }
    let scaled = (v.abs() * Rational::from_integer(num_bigint::BigInt::from(10).pow(k))).to_integer();
    let digits = format!("{:0>width$}", scaled, width = k as usize + 1);
    let (int, frac) = digits.split_at(digits.len() - k as usize);
    let sign = if v.is_negative() { "-" } else { "" };
    Some(format!("{sign}{int}.{frac}"))
}

fn write_num(f: &mut fmt::Formatter<'_>, v: &Rational, min_prec: u8) -> fmt::Result {
    match decimal_string(v) {
        Some(s) if v.is_negative() && min_prec >= PREC_POSTFIX => write!(f, "({s})"),
        Some(s) => write!(f, "{s}"),
        None => write!(f, "({}/{})", v.numer(), v.denom()),
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    let (prec, body): (u8, Box<dyn Fn(&mut fmt::Formatter<'_>) -> fmt::Result + '_>) = match e {
        Expr::Num(v) => return write_num(f, v, min_prec),
        Expr::Var(v) => {
            return write!(f, "{}{}{}", v.name, "'".repeat(v.order as usize), if v.prev { "-" } else { "" });
        }
        Expr::Neg(inner) => (
            PREC_NEG,
            Box::new(move |f| {
                write!(f, "-")?;
                match inner.as_ref() {
                    Expr::Neg(_) | Expr::Num(_) => {
                        write!(f, "(")?;
                        write_expr(f, inner, 0)?;
                        write!(f, ")")
                    }
                    _ => write_expr(f, inner, PREC_NEG),
                }
            }),
        ),
        Expr::Bin(op, a, b) => {
            let (p, sym) = match op {
                BinOp::Add => (PREC_SUM, "+"),
                BinOp::Sub => (PREC_SUM, "-"),
                BinOp::Mul => (PREC_PROD, "*"),
                BinOp::Div => (PREC_PROD, "/"),
            };
            (
                p,
                Box::new(move |f| {
                    write_expr(f, a, p)?;
                    write!(f, " {sym} ")?;
                    write_expr(f, b, p + 1)
                }),
            )
        }
        Expr::Deriv(inner) => (
            PREC_POSTFIX,
            Box::new(move |f| {
                write_postfix_operand(f, inner)?;
                write!(f, "'")
            }),
        ),
        Expr::Prev(inner) => (
            PREC_POSTFIX,
            Box::new(move |f| {
                write_postfix_operand(f, inner)?;
                write!(f, "-")
            }),
        ),
    };
    if prec < min_prec {
        write!(f, "(")?;
        body(f)?;
        write!(f, ")")
    } else {
        body(f)
    }
}

fn write_postfix_operand(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e {
        Expr::Deriv(_) => write_expr(f, e, PREC_POSTFIX),
        _ => {
            write!(f, "(")?;
            write_expr(f, e, 0)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self, 0)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op.symbol(), self.rhs)
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " & ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

fn write_conj_item(f: &mut fmt::Formatter<'_>, c: &Constraint) -> fmt::Result {
    match c {
        Constraint::Cond(..) | Constraint::Conj(_) => write!(f, "({c})"),
        _ => write!(f, "{c}"),
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Atom(a) => write!(f, "{a}"),
            Constraint::Conj(items) => {
                for (i, c) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " & ")?;
                    }
                    write_conj_item(f, c)?;
                }
                Ok(())
            }
            Constraint::Cond(g, c) => write!(f, "{g} => {c}"),
            Constraint::Always(c) => match c.as_ref() {
                Constraint::Always(_) | Constraint::Exists(..) => write!(f, "[]{c}"),
                _ => write!(f, "[]({c})"),
            },
            Constraint::Exists(x, c) => write!(f, "E {x}.({c})"),
        }
    }
}
