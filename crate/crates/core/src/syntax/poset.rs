//! Posets of module sets, either derived from `<<` priorities or given
//! explicitly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Decl, SyntaxError};

pub type ModuleSet = BTreeSet<String>;

/// Elements are kept sorted (by size, then lexicographically) so two posets
/// with the same content compare equal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleSetPoset {
    elements: Vec<ModuleSet>,
    /// Transitively closed strict order: `(i, j)` means `elements[i] ≺ elements[j]`.
    less: BTreeSet<(usize, usize)>,
}

impl ModuleSetPoset {
    /// Builds a poset from elements and generating pairs, taking the
    /// transitive closure. Fails on cycles and duplicate elements.
    pub fn new(elements: Vec<ModuleSet>, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, SyntaxError> {
        let n = elements.len();
        if n == 0 {
            return Err(SyntaxError::Poset("a poset needs at least one element".into()));
        }
        let distinct: BTreeSet<&ModuleSet> = elements.iter().collect();
        if distinct.len() != n {
            return Err(SyntaxError::Poset("duplicate element".into()));
        }
        let mut rel = vec![vec![false; n]; n];
        for (i, j) in pairs {
            if i >= n || j >= n {
                return Err(SyntaxError::Poset(format!("order pair ({i}, {j}) out of range")));
            }
            rel[i][j] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if rel[i][k] {
                    for j in 0..n {
                        if rel[k][j] {
                            rel[i][j] = true;
                        }
                    }
                }
            }
        }
        for (i, row) in rel.iter().enumerate() {
            if row[i] {
                return Err(SyntaxError::Poset(format!(
                    "order is not irreflexive: {} precedes itself",
                    fmt_set(&elements[i])
                )));
            }
        }

        // canonical element order
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| {
            elements[a].len().cmp(&elements[b].len()).then_with(|| elements[a].cmp(&elements[b]))
        });
        let mut remap = vec![0; n];
        for (new, &old) in idx.iter().enumerate() {
            remap[old] = new;
        }
        let mut less = BTreeSet::new();
        for i in 0..n {
            for j in 0..n {
                if rel[i][j] {
                    less.insert((remap[i], remap[j]));
                }
            }
        }
        let elements = idx.into_iter().map(|i| elements[i].clone()).collect();
        Ok(ModuleSetPoset { elements, less })
    }

    /// All given sets ordered by strict inclusion.
    pub fn by_inclusion(elements: Vec<ModuleSet>) -> Result<Self, SyntaxError> {
        let mut pairs = Vec::new();
        for (i, a) in elements.iter().enumerate() {
            for (j, b) in elements.iter().enumerate() {
                if i != j && a.is_subset(b) {
                    pairs.push((i, j));
                }
            }
        }
        Self::new(elements, pairs)
    }

    pub fn elements(&self) -> &[ModuleSet] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn is_less(&self, i: usize, j: usize) -> bool {
        self.less.contains(&(i, j))
    }

    pub fn order_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.less.iter().copied()
    }

    pub fn index_of(&self, set: &ModuleSet) -> Option<usize> {
        self.elements.iter().position(|e| e == set)
    }

    /// Indices of elements strictly above `i`.
    pub fn above(&self, i: usize) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.is_less(i, j)).collect()
    }

    pub fn maximal(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.above(i).is_empty()).collect()
    }

    /// Covering pairs of the order.
    pub fn hasse_edges(&self) -> Vec<(usize, usize)> {
        self.less
            .iter()
            .copied()
            .filter(|&(i, j)| !(0..self.len()).any(|k| self.is_less(i, k) && self.is_less(k, j)))
            .collect()
    }

    /// Every module mentioned by some element.
    pub fn modules(&self) -> ModuleSet {
        self.elements.iter().flatten().cloned().collect()
    }

    /// Indices ordered so that every element comes after all elements above
    /// it (larger candidates are tried first).
    pub fn search_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by_key(|&i| (std::cmp::Reverse(self.above_count(i) == 0), std::cmp::Reverse(self.elements[i].len()), i));
        // a topological refinement: stable sort by number of elements above
        idx.sort_by_key(|&i| self.above_count(i));
        idx
    }

    fn above_count(&self, i: usize) -> usize {
        self.less.iter().filter(|&&(a, _)| a == i).count()
    }
}

pub fn fmt_set(s: &ModuleSet) -> String {
    let v: Vec<&str> = s.iter().map(String::as_str).collect();
    format!("{{{}}}", v.join(", "))
}

impl fmt::Display for ModuleSetPoset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.elements.iter().enumerate() {
            writeln!(f, "{i}: {}", fmt_set(e))?;
        }
        for (i, j) in self.hasse_edges() {
            writeln!(f, "{i} < {j}")?;
        }
        Ok(())
    }
}

/// Transitively closed "weaker than" relation between module names.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PriorityRelation {
    modules: BTreeSet<String>,
    /// `(weak, strong)` pairs.
    weaker: BTreeSet<(String, String)>,
}

impl PriorityRelation {
    pub fn from_decl(decl: &Decl) -> Self {
        let mut rel = PriorityRelation::default();
        rel.modules.extend(decl.modules());
        collect_priorities(decl, &mut rel.weaker);
        rel.close();
        rel
    }

    pub fn modules(&self) -> &BTreeSet<String> {
        &self.modules
    }

    pub fn add_module(&mut self, m: impl Into<String>) {
        self.modules.insert(m.into());
    }

    pub fn add_edge(&mut self, weak: impl Into<String>, strong: impl Into<String>) {
        let (w, s) = (weak.into(), strong.into());
        self.modules.insert(w.clone());
        self.modules.insert(s.clone());
        self.weaker.insert((w, s));
    }

    pub fn close(&mut self) {
        loop {
            let mut added = Vec::new();
            for (a, b) in &self.weaker {
                for (c, d) in &self.weaker {
                    if b == c && !self.weaker.contains(&(a.clone(), d.clone())) {
                        added.push((a.clone(), d.clone()));
                    }
                }
            }
            if added.is_empty() {
                break;
            }
            self.weaker.extend(added);
        }
    }

    pub fn is_weaker(&self, weak: &str, strong: &str) -> bool {
        self.weaker.contains(&(weak.to_string(), strong.to_string()))
    }

    /// Modules with nothing stronger than them.
    pub fn has_stronger(&self, m: &str) -> bool {
        self.weaker.iter().any(|(w, _)| w == m)
    }

    /// `S` is admissible when each omitted module is weaker than some
    /// retained one.
    pub fn admissible(&self, set: &ModuleSet) -> bool {
        self.modules
            .iter()
            .filter(|m| !set.contains(*m))
            .all(|m| set.iter().any(|kept| self.is_weaker(m, kept)))
    }

    /// All admissible subsets ordered by strict inclusion.
    pub fn derive_poset(&self) -> ModuleSetPoset {
        let mods: Vec<&String> = self.modules.iter().collect();
        let required: ModuleSet = mods.iter().filter(|m| !self.has_stronger(m)).map(|m| (*m).clone()).collect();
        let optional: Vec<&String> = mods.iter().copied().filter(|m| self.has_stronger(m)).collect();
        let mut elements = Vec::new();
        for mask in 0u64..(1u64 << optional.len()) {
            let mut s = required.clone();
            for (k, m) in optional.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    s.insert((*m).clone());
                }
            }
            if self.admissible(&s) {
                elements.push(s);
            }
        }
        ModuleSetPoset::by_inclusion(elements).expect("inclusion is a strict order")
    }
}

fn collect_priorities(decl: &Decl, out: &mut BTreeSet<(String, String)>) {
    match decl {
        Decl::Module(_) => {}
        Decl::Parallel(ds) => ds.iter().for_each(|d| collect_priorities(d, out)),
        Decl::Priority(ds) => {
            for d in ds {
                collect_priorities(d, out);
            }
            for w in 0..ds.len() {
                for s in w + 1..ds.len() {
                    for a in ds[w].modules() {
                        for b in ds[s].modules() {
                            out.insert((a.clone(), b));
                        }
                    }
                }
            }
        }
    }
}

/// Admissible module sets of a declaration, ordered by strict inclusion.
pub fn derive_module_poset(decl: &Decl) -> ModuleSetPoset {
    PriorityRelation::from_decl(decl).derive_poset()
}

/// JSON sidecar shape: `{"elements": [["A","C"], ...], "order": [[0, 1], ...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplicitPoset {
    pub elements: Vec<Vec<String>>,
    #[serde(default)]
    pub order: Vec<(usize, usize)>,
}

pub fn load_explicit_poset(spec: &ExplicitPoset, defined: &BTreeSet<String>) -> Result<ModuleSetPoset, SyntaxError> {
    let mut elements = Vec::new();
    for e in &spec.elements {
        let set: ModuleSet = e.iter().cloned().collect();
        if let Some(m) = set.iter().find(|m| !defined.contains(*m)) {
            return Err(SyntaxError::Poset(format!("element references undefined module {m}")));
        }
        elements.push(set);
    }
    ModuleSetPoset::new(elements, spec.order.iter().copied())
}

impl ExplicitPoset {
    pub fn from_poset(p: &ModuleSetPoset) -> Self {
        ExplicitPoset {
            elements: p.elements().iter().map(|e| e.iter().cloned().collect()).collect(),
            order: p.order_pairs().collect(),
        }
    }
}

/// Groups modules by how many admissible elements contain them; handy for
/// diagnostics.
pub fn membership_counts(p: &ModuleSetPoset) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for e in p.elements() {
        for x in e {
            *m.entry(x.clone()).or_insert(0) += 1;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;

    fn set(xs: &[&str]) -> ModuleSet {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn decl(src: &str) -> Decl {
        let mut text = String::new();
        for m in ["INIT", "PARAMS", "FALL", "BOUNCE", "D", "E", "F", "M", "A", "B", "C"] {
            text.push_str(&format!("{m} <=> x = 1.\n"));
        }
        text.push_str(src);
        parse_program(&text).unwrap().declaration.unwrap()
    }

    /// Independent oracle: enumerate every subset and test admissibility
    /// straight from the definition.
    fn brute_force(modules: &[&str], weaker: &[(&str, &str)]) -> Vec<ModuleSet> {
        let mut closed: BTreeSet<(String, String)> = weaker.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        for _ in 0..modules.len() {
            let snapshot = closed.clone();
            for (a, b) in &snapshot {
                for (c, d) in &snapshot {
                    if b == c {
                        closed.insert((a.clone(), d.clone()));
                    }
                }
            }
        }
        let mut out = Vec::new();
        for mask in 0..(1u32 << modules.len()) {
            let s: ModuleSet = (0..modules.len()).filter(|k| mask & (1 << k) != 0).map(|k| modules[k].to_string()).collect();
            let ok = modules
                .iter()
                .filter(|m| !s.contains(**m))
                .all(|m| s.iter().any(|k| closed.contains(&(m.to_string(), k.clone()))));
            if ok {
                out.push(s);
            }
        }
        out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        out
    }

    #[test]
    fn bouncing_ball_poset() {
        let p = derive_module_poset(&decl("INIT, PARAMS, (FALL << BOUNCE)."));
        let expected = brute_force(&["INIT", "PARAMS", "FALL", "BOUNCE"], &[("FALL", "BOUNCE")]);
        assert_eq!(p.elements(), expected.as_slice());
        assert_eq!(p.elements(), &[set(&["BOUNCE", "INIT", "PARAMS"]), set(&["BOUNCE", "FALL", "INIT", "PARAMS"])]);
        assert!(p.is_less(0, 1));
        assert_eq!(p.hasse_edges(), vec![(0, 1)]);
    }

    #[test]
    fn unprioritized_modules_are_required() {
        let p = derive_module_poset(&decl("D, E, F."));
        assert_eq!(p.elements(), &[set(&["D", "E", "F"])]);
    }

    #[test]
    fn single_module() {
        let p = derive_module_poset(&decl("M."));
        assert_eq!(p.elements(), &[set(&["M"])]);
        assert_eq!(p.order_pairs().count(), 0);
    }

    #[test]
    fn timer_example_poset() {
        let p = derive_module_poset(&decl("A, (B << C)."));
        assert_eq!(p.elements(), &[set(&["A", "C"]), set(&["A", "B", "C"])]);
    }

    #[test]
    fn chains_are_transitive() {
        let p = derive_module_poset(&decl("D << E << F."));
        let expected = brute_force(&["D", "E", "F"], &[("D", "E"), ("E", "F")]);
        assert_eq!(p.elements(), expected.as_slice());
        // D may be dropped because F is kept, even without E
        assert!(p.index_of(&set(&["F"])).is_some());
    }

    #[test]
    fn explicit_poset_accepted_verbatim() {
        let defined = set(&["A", "B", "C"]);
        let spec = ExplicitPoset { elements: vec![vec!["A".into(), "C".into()], vec!["A".into(), "B".into(), "C".into()]], order: vec![(0, 1)] };
        let p = load_explicit_poset(&spec, &defined).unwrap();
        assert_eq!(p.elements(), &[set(&["A", "C"]), set(&["A", "B", "C"])]);
        assert!(p.is_less(0, 1));
        assert!(!p.is_less(1, 0));
    }

    #[test]
    fn explicit_poset_errors() {
        let defined = set(&["A", "B", "C"]);
        let refl = ExplicitPoset { elements: vec![vec!["A".into()]], order: vec![(0, 0)] };
        assert!(load_explicit_poset(&refl, &defined).is_err());
        let cyc = ExplicitPoset { elements: vec![vec!["A".into()], vec!["B".into()]], order: vec![(0, 1), (1, 0)] };
        assert!(load_explicit_poset(&cyc, &defined).is_err());
        let undef = ExplicitPoset { elements: vec![vec!["Z".into()]], order: vec![] };
        assert!(load_explicit_poset(&undef, &defined).is_err());
    }

    #[test]
    fn explicit_poset_transitive_closure() {
        let defined = set(&["A", "B", "C"]);
        let spec = ExplicitPoset {
            elements: vec![vec!["A".into()], vec!["A".into(), "B".into()], vec!["A".into(), "B".into(), "C".into()]],
            order: vec![(0, 1), (1, 2)],
        };
        let p = load_explicit_poset(&spec, &defined).unwrap();
        assert!(p.is_less(0, 2));
        assert_eq!(p.hasse_edges(), vec![(0, 1), (1, 2)]);
    }

    proptest::proptest! {
        #[test]
        fn derived_poset_properties(edges in proptest::collection::vec((0usize..5, 0usize..5), 0..6)) {
            let names = ["M0", "M1", "M2", "M3", "M4"];
            let mut rel = PriorityRelation::default();
            for n in names { rel.add_module(n); }
            // only forward edges keep the relation acyclic
            let pairs: Vec<(&str, &str)> = edges.iter().filter(|(a, b)| a < b).map(|&(a, b)| (names[a], names[b])).collect();
            for (a, b) in &pairs { rel.add_edge(*a, *b); }
            rel.close();
            let p = rel.derive_poset();
            let expected = brute_force(&names, &pairs);
            proptest::prop_assert_eq!(p.elements(), expected.as_slice());
            let full: ModuleSet = names.iter().map(|s| s.to_string()).collect();
            let top = p.index_of(&full).unwrap();
            proptest::prop_assert_eq!(p.maximal(), vec![top]);
            for e in p.elements() {
                for m in names.iter().filter(|m| !rel.has_stronger(m)) {
                    proptest::prop_assert!(e.contains(*m));
                }
            }
        }
    }
}
