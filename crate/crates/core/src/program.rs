//! Programs: module definitions, the module-set poset, and the continuity
//! frame modules added on top of the user's modules.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::constraint::skolem_base;
use crate::syntax::{
    load_explicit_poset, parse_program, Atom, AtomRole, Constraint, Decl, ExplicitPoset, ModuleSet, ModuleSetPoset, PriorityRelation, SourceProgram,
    SyntaxError,
};

/// `CONT(x,k)`: left continuity of the `k`-th derivative of `x`. When `var`
/// is a bound name the frame applies to every Skolem instance of it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Frame {
    pub var: String,
    pub order: u32,
    pub template: bool,
}

impl Frame {
    pub fn name(&self) -> String {
        if self.template {
            format!("CONT({}#*,{})", self.var, self.order)
        } else {
            format!("CONT({},{})", self.var, self.order)
        }
    }

    /// Whether the frame constrains the concrete variable `name`.
    pub fn applies_to(&self, name: &str) -> bool {
        if self.template {
            name.contains('#') && skolem_base(name) == self.var
        } else {
            name == self.var
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FrameOptions {
    pub disabled: bool,
    /// `(variable, order)` pairs to leave out; templates are written `a#*`.
    pub exclude: Vec<(String, u32)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PosetOrigin {
    Declared,
    Explicit,
}

#[derive(Clone, Debug)]
pub struct Program {
    pub source: SourceProgram,
    pub defs: BTreeMap<String, Constraint>,
    /// Poset over user modules only.
    pub user_poset: ModuleSetPoset,
    /// Poset the solver searches; includes frames once they are injected.
    pub poset: ModuleSetPoset,
    pub origin: PosetOrigin,
    pub frames: Vec<Frame>,
    /// Highest derivative order in non-guard atoms, per program variable
    /// and per bound name (keyed `a#*`).
    pub orders: BTreeMap<String, u32>,
    relation: Option<PriorityRelation>,
}

impl Program {
    pub fn parse(text: &str, explicit: Option<&ExplicitPoset>) -> Result<Self, SyntaxError> {
        Self::from_source(parse_program(text)?, explicit)
    }

    pub fn from_source(source: SourceProgram, explicit: Option<&ExplicitPoset>) -> Result<Self, SyntaxError> {
        let defs: BTreeMap<String, Constraint> = source.definitions.iter().map(|d| (d.name.clone(), d.body.clone())).collect();
        if defs.is_empty() {
            return Err(SyntaxError::Poset("program defines no modules".into()));
        }
        let names: BTreeSet<String> = defs.keys().cloned().collect();
        let (user_poset, origin, relation) = match explicit {
            Some(e) => (load_explicit_poset(e, &names)?, PosetOrigin::Explicit, None),
            None => {
                let decl = source.declaration.clone().unwrap_or_else(|| Decl::Parallel(names.iter().cloned().map(Decl::Module).collect()));
                let rel = PriorityRelation::from_decl(&decl);
                (rel.derive_poset(), PosetOrigin::Declared, Some(rel))
            }
        };
        let mut orders = BTreeMap::new();
        for body in defs.values() {
            collect_orders(body, &mut Vec::new(), &mut orders);
        }
        Ok(Program { poset: user_poset.clone(), user_poset, origin, frames: Vec::new(), orders, relation, defs, source })
    }

    pub fn is_frame(&self, module: &str) -> bool {
        module.starts_with("CONT(")
    }

    pub fn frame(&self, module: &str) -> Option<&Frame> {
        self.frames.iter().find(|f| f.name() == module)
    }

    /// Derivative orders below which the variable's value is state carried
    /// across instants: `0..max(order, 1)`.
    pub fn state_orders(&self, var: &str) -> u32 {
        self.max_order(var).max(1)
    }

    pub fn max_order(&self, var: &str) -> u32 {
        let key = if var.contains('#') { format!("{}#*", skolem_base(var)) } else { var.to_string() };
        self.orders.get(&key).copied().unwrap_or(0)
    }

    /// Program-level variable names (bound names excluded).
    pub fn variables(&self) -> BTreeSet<String> {
        self.orders.keys().filter(|k| !k.ends_with("#*")).cloned().collect()
    }

    /// Adds `CONT(x,k)` for each variable `x` and each `k` below its highest
    /// derivative order, and rebuilds the poset around them.
    pub fn inject_continuity_defaults(&self, opts: &FrameOptions) -> Program {
        let mut p = self.clone();
        p.frames.clear();
        if !opts.disabled {
            for (key, &m) in &self.orders {
                let (var, template) = match key.strip_suffix("#*") {
                    Some(base) => (base.to_string(), true),
                    None => (key.clone(), false),
                };
                for k in 0..m {
                    let excluded = opts.exclude.iter().any(|(v, o)| *o == k && (v == key || (!template && v == &var)));
                    if !excluded {
                        p.frames.push(Frame { var: var.clone(), order: k, template });
                    }
                }
            }
        }
        p.frames.sort();
        p.poset = match (&self.relation, self.origin) {
            (Some(rel), PosetOrigin::Declared) => self.derived_with_frames(rel, &p.frames),
            _ => product_with_frames(&self.user_poset, &p.frames),
        };
        p
    }

    fn derived_with_frames(&self, rel: &PriorityRelation, frames: &[Frame]) -> ModuleSetPoset {
        let mut r = rel.clone();
        for f in frames {
            let fname = f.name();
            r.add_module(fname.clone());
            for (m, body) in &self.defs {
                if body.contains_conditional() {
                    r.add_edge(fname.clone(), m.clone());
                } else if is_differential(body) && rel.has_stronger(m) {
                    r.add_edge(m.clone(), fname.clone());
                }
            }
        }
        r.close();
        r.derive_poset()
    }

    /// User modules of a poset element.
    pub fn user_part(&self, e: &ModuleSet) -> ModuleSet {
        e.iter().filter(|m| !self.is_frame(m)).cloned().collect()
    }
}

/// Frames are always omissible: each user element is paired with every
/// subset of frames, ordered componentwise.
fn product_with_frames(user: &ModuleSetPoset, frames: &[Frame]) -> ModuleSetPoset {
    let names: Vec<String> = frames.iter().map(Frame::name).collect();
    let n = names.len();
    let mut elements = Vec::new();
    let mut tags = Vec::new();
    for (i, e) in user.elements().iter().enumerate() {
        for mask in 0u64..(1 << n) {
            let mut s = e.clone();
            for (k, f) in names.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    s.insert(f.clone());
                }
            }
            elements.push(s);
            tags.push((i, mask));
        }
    }
    let mut pairs = Vec::new();
    for (a, &(ea, ma)) in tags.iter().enumerate() {
        for (b, &(eb, mb)) in tags.iter().enumerate() {
            let user_le = ea == eb || user.is_less(ea, eb);
            if a != b && user_le && ma & mb == ma {
                pairs.push((a, b));
            }
        }
    }
    ModuleSetPoset::new(elements, pairs).expect("product of strict orders")
}

/// A module with a derivative atom under `□` and outside any conditional.
pub fn is_differential(c: &Constraint) -> bool {
    fn go(c: &Constraint, boxed: bool) -> bool {
        match c {
            Constraint::Atom(a) => boxed && a.max_order() > 0,
            Constraint::Conj(items) => items.iter().any(|i| go(i, boxed)),
            Constraint::Cond(..) => false,
            Constraint::Always(b) => go(b, true),
            Constraint::Exists(_, b) => go(b, boxed),
        }
    }
    go(c, false)
}

fn collect_orders(c: &Constraint, bound: &mut Vec<String>, out: &mut BTreeMap<String, u32>) {
    let mut record = |a: &Atom, role: AtomRole, bound: &Vec<String>| {
        a.visit_vars(&mut |v| {
            let key = if bound.contains(&v.name) { format!("{}#*", v.name) } else { v.name.clone() };
            let e = out.entry(key).or_insert(0);
            if role == AtomRole::Body {
                *e = (*e).max(v.order);
            }
        });
    };
    match c {
        Constraint::Atom(a) => record(a, AtomRole::Body, bound),
        Constraint::Conj(items) => items.iter().for_each(|i| collect_orders(i, bound, out)),
        Constraint::Cond(g, b) => {
            for a in g.atoms() {
                record(a, AtomRole::Guard, bound);
            }
            collect_orders(b, bound, out);
        }
        Constraint::Always(b) => collect_orders(b, bound, out),
        Constraint::Exists(x, b) => {
            bound.push(x.clone());
            collect_orders(b, bound, out);
            bound.pop();
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.poset)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const BALL: &str = "\
INIT   <=> ht = 10 & ht' = 0.
PARAMS <=> [](g = 9.8 & c = 0.5).
FALL   <=> [](ht'' = -g).
BOUNCE <=> [](ht- = 0 => ht' = -c * (ht'-)).
INIT, PARAMS, (FALL << BOUNCE).
";

    fn set(xs: &[&str]) -> ModuleSet {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn ball_frames() {
        let p = Program::parse(BALL, None).unwrap().inject_continuity_defaults(&FrameOptions::default());
        let names: Vec<String> = p.frames.iter().map(Frame::name).collect();
        assert_eq!(names, ["CONT(ht,0)", "CONT(ht,1)"]);
        let full = set(&["INIT", "PARAMS", "FALL", "BOUNCE", "CONT(ht,0)", "CONT(ht,1)"]);
        let top = p.poset.index_of(&full).unwrap();
        assert_eq!(p.poset.maximal(), vec![top]);
        let impact = set(&["INIT", "PARAMS", "BOUNCE", "CONT(ht,0)"]);
        assert!(p.poset.index_of(&impact).is_some());
        assert_eq!(p.max_order("ht"), 2);
        assert_eq!(p.state_orders("g"), 1);
    }

    #[test]
    fn no_differential_constraints_no_frames() {
        let p = Program::parse("A <=> [](x = 1).\nB <=> [](y > x).\nA << B.\n", None).unwrap();
        let q = p.inject_continuity_defaults(&FrameOptions::default());
        assert!(q.frames.is_empty());
        assert_eq!(q.poset, p.poset);
    }

    #[test]
    fn timer_frames_are_templates() {
        let src = "A <=> f = 0 & [](f' = 1).\nB <=> [](g = 0).\nC <=> [](f = 5 => E a.(a = 0 & [](a' = 1) & [](a = 2 => g = 1))).\nA, (B << C).\n";
        let p = Program::parse(src, None).unwrap().inject_continuity_defaults(&FrameOptions::default());
        let names: Vec<String> = p.frames.iter().map(Frame::name).collect();
        assert_eq!(names, ["CONT(a#*,0)", "CONT(f,0)"]);
        assert!(p.frames[0].applies_to("a#3"));
        assert!(!p.frames[0].applies_to("a"));
        assert_eq!(p.max_order("a#7"), 1);
        assert_eq!(p.variables(), set(&["f", "g"]));
    }

    #[test]
    fn pulse_program_frames() {
        let src = "G <=> a = 0 & b = 0 & [](a' = 1).\nH <=> [](b' = 0).\nJ <=> [](a- = 1 => b = 1) & [](b- = 1 => b = 0).\nG, (H << J).\n";
        let p = Program::parse(src, None).unwrap().inject_continuity_defaults(&FrameOptions::default());
        let e = set(&["G", "J", "CONT(a,0)"]);
        assert!(p.poset.index_of(&e).is_some());
        assert!(p.poset.elements().iter().all(|s| s.contains("G") && s.contains("J")));
        let opts = FrameOptions { disabled: false, exclude: vec![("b".into(), 0)] };
        let q = Program::parse(src, None).unwrap().inject_continuity_defaults(&opts);
        assert_eq!(q.frames.len(), 1);
    }

    #[test]
    fn explicit_poset_product() {
        let src = "D <=> y = 0.\nE <=> [](y' = 1 & x' = 0).\nF <=> [](y = 5 => x = 1).\n";
        let mut elements = Vec::new();
        for mask in 0..8u32 {
            let s: Vec<String> = ["D", "E", "F"].iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, m)| m.to_string()).collect();
            elements.push(s);
        }
        let mut order = Vec::new();
        for a in 0..8usize {
            for b in 0..8usize {
                if a != b && a & b == a {
                    order.push((a, b));
                }
            }
        }
        let ex = ExplicitPoset { elements, order };
        let p = Program::parse(src, Some(&ex)).unwrap();
        assert_eq!(p.user_poset.len(), 8);
        let q = p.inject_continuity_defaults(&FrameOptions::default());
        assert_eq!(q.poset.len(), 32);
        let de = q.poset.index_of(&set(&["D", "E", "CONT(x,0)", "CONT(y,0)"])).unwrap();
        let df = q.poset.index_of(&set(&["D", "F", "CONT(y,0)"])).unwrap();
        assert!(!q.poset.is_less(de, df) && !q.poset.is_less(df, de));
        let top = q.poset.index_of(&set(&["D", "E", "F", "CONT(x,0)", "CONT(y,0)"])).unwrap();
        assert!(q.poset.is_less(de, top));
    }
}
