//! Consistency of candidate module sets at an instant or over an open
//! interval, and the search for maximal consistent candidates.

pub mod interval;
pub mod point;

use std::collections::BTreeMap;

use crate::syntax::{ModuleSet, ModuleSetPoset};

pub use interval::{solve_interval, IntervalInput, IntervalModel};
pub use point::{solve_point, PointInput, PointModel};

/// Result of checking one candidate.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome<T> {
    Consistent(T),
    Inconsistent(String),
    /// No contradiction found but some unknowns are left free.
    Underdetermined(String),
    /// Outside the supported constraint class.
    Unsupported(String),
}

impl<T> Outcome<T> {
    pub fn is_inconsistent(&self) -> bool {
        matches!(self, Outcome::Inconsistent(_))
    }

    pub fn model(&self) -> Option<&T> {
        match self {
            Outcome::Consistent(m) => Some(m),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Outcome::Consistent(_) => "consistent",
            Outcome::Inconsistent(_) => "inconsistent",
            Outcome::Underdetermined(_) => "underdetermined",
            Outcome::Unsupported(_) => "unsupported",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SearchResult<T> {
    /// One entry per maximal consistent element, in poset order.
    Found(Vec<(ModuleSet, T)>),
    /// Every element is inconsistent; carries the reason for each maximal
    /// element of the poset.
    NoSolution(Vec<(ModuleSet, String)>),
    Underdetermined(ModuleSet, String),
    Unsupported(ModuleSet, String),
}

/// All `E` whose check is not inconsistent while every `E' ≻ E` is.
/// Elements dominated by a non-inconsistent element are never checked.
pub fn find_maximal_consistent<T>(poset: &ModuleSetPoset, mut check: impl FnMut(&ModuleSet) -> Outcome<T>) -> SearchResult<T> {
    let n = poset.len();
    let above: Vec<Vec<usize>> = (0..n).map(|i| poset.above(i)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // every element comes after everything above it; larger sets first
    order.sort_by_key(|&i| (above[i].len(), std::cmp::Reverse(poset.elements()[i].len()), i));

    // None: dominated, never checked
    let mut results: BTreeMap<usize, Option<Outcome<T>>> = BTreeMap::new();
    for &i in &order {
        let dominated = above[i].iter().any(|j| match results.get(j) {
            Some(Some(o)) => !o.is_inconsistent(),
            Some(None) => true,
            None => unreachable!("elements above are visited first"),
        });
        if dominated {
            results.insert(i, None);
        } else {
            let o = check(&poset.elements()[i]);
            results.insert(i, Some(o));
        }
    }

    let mut found = Vec::new();
    let mut weak = None;
    let mut unsupported = None;
    for (i, r) in results {
        let e = poset.elements()[i].clone();
        match r {
            Some(Outcome::Consistent(m)) => found.push((e, m)),
            Some(Outcome::Underdetermined(d)) => {
                weak.get_or_insert((e, d));
            }
            Some(Outcome::Unsupported(d)) => {
                unsupported.get_or_insert((e, d));
            }
            _ => {}
        }
    }
    if let Some((e, d)) = unsupported {
        return SearchResult::Unsupported(e, d);
    }
    if let Some((e, d)) = weak {
        return SearchResult::Underdetermined(e, d);
    }
    if found.is_empty() {
        return SearchResult::NoSolution(Vec::new());
    }
    // already in poset order
    SearchResult::Found(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::PriorityRelation;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn set(xs: &[&str]) -> ModuleSet {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn picks_top_when_consistent() {
        let mut rel = PriorityRelation::default();
        rel.add_edge("F", "B");
        rel.add_module("I");
        let p = rel.derive_poset();
        let r = find_maximal_consistent(&p, |e| Outcome::Consistent(e.len()));
        assert_eq!(r, SearchResult::Found(vec![(set(&["B", "F", "I"]), 3)]));
    }

    #[test]
    fn falls_back_when_top_fails() {
        let mut rel = PriorityRelation::default();
        rel.add_edge("F", "B");
        rel.add_module("I");
        let p = rel.derive_poset();
        let r = find_maximal_consistent(&p, |e| if e.contains("F") { Outcome::Inconsistent("clash".into()) } else { Outcome::Consistent(()) });
        assert_eq!(r, SearchResult::Found(vec![(set(&["B", "I"]), ())]));
        let none = find_maximal_consistent(&p, |_| Outcome::<()>::Inconsistent("x".into()));
        assert!(matches!(none, SearchResult::NoSolution(_)));
    }

    #[test]
    fn incomparable_maxima() {
        let elems: Vec<ModuleSet> = vec![set(&["D"]), set(&["D", "E"]), set(&["D", "F"]), set(&["D", "E", "F"])];
        let p = ModuleSetPoset::by_inclusion(elems).unwrap();
        let r = find_maximal_consistent(&p, |e| if e.len() == 3 { Outcome::Inconsistent("x".into()) } else { Outcome::Consistent(()) });
        let SearchResult::Found(v) = r else { panic!() };
        let got: BTreeSet<ModuleSet> = v.into_iter().map(|x| x.0).collect();
        assert_eq!(got, BTreeSet::from([set(&["D", "E"]), set(&["D", "F"])]));
    }

    #[test]
    fn underdetermined_above_blocks() {
        let elems: Vec<ModuleSet> = vec![set(&["A"]), set(&["A", "B"])];
        let p = ModuleSetPoset::by_inclusion(elems).unwrap();
        let r = find_maximal_consistent(&p, |e| if e.len() == 2 { Outcome::Underdetermined("b free".into()) } else { Outcome::Consistent(()) });
        assert!(matches!(r, SearchResult::Underdetermined(..)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        // random priorities over at most 5 modules and a random consistency
        // oracle; results form an antichain and re-checking anything above
        // a result yields inconsistent
        #[test]
        fn antichain_and_maximality(edges in proptest::collection::vec((0usize..5, 0usize..5), 0..6),
                                    bad in proptest::collection::btree_set(proptest::collection::btree_set(0usize..5, 1..3), 0..5),
                                    n in 1usize..=5) {
            let names: Vec<String> = (0..n).map(|i| format!("M{i}")).collect();
            let mut rel = PriorityRelation::default();
            for m in &names { rel.add_module(m.clone()); }
            for (a, b) in edges { if a < b && b < n { rel.add_edge(names[a].clone(), names[b].clone()); } }
            rel.close();
            let p = rel.derive_poset();
            // a set is inconsistent when it contains a forbidden combination
            let forbidden: Vec<ModuleSet> = bad.iter().map(|s| s.iter().filter(|&&i| i < n).map(|&i| names[i].clone()).collect()).filter(|s: &ModuleSet| !s.is_empty()).collect();
            let oracle = |e: &ModuleSet| forbidden.iter().any(|f| f.is_subset(e));
            let r = find_maximal_consistent(&p, |e| if oracle(e) { Outcome::Inconsistent("x".into()) } else { Outcome::Consistent(()) });
            match r {
                SearchResult::Found(v) => {
                    for (a, _) in &v {
                        prop_assert!(!oracle(a));
                        let ia = p.index_of(a).unwrap();
                        for j in p.above(ia) { prop_assert!(oracle(&p.elements()[j])); }
                        for (b, _) in &v {
                            let ib = p.index_of(b).unwrap();
                            prop_assert!(!p.is_less(ia, ib));
                        }
                    }
                    // completeness: every maximal consistent element is returned
                    for (i, e) in p.elements().iter().enumerate() {
                        if !oracle(e) && p.above(i).iter().all(|&j| oracle(&p.elements()[j])) {
                            prop_assert!(v.iter().any(|(a, _)| a == e));
                        }
                    }
                }
                SearchResult::NoSolution(_) => prop_assert!(p.elements().iter().all(oracle)),
                other => prop_assert!(false, "unexpected {:?}", other),
            }
        }
    }
}
