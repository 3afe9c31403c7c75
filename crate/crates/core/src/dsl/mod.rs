//! Declarations of algebraic data types annotated with collect groups and
//! numeric constraints.
//!
//! The concrete syntax is OCaml's type declaration syntax extended with the
//! `[@collect]`, `[@collect k]` and `[@@satisfying ...]` attributes:
//!
//! ```text
//! type bst =
//!   | Node of bst * (int[@collect]) * bst
//!   | Leaf
//! [@@satisfying increasing]
//! ```
//!
//! Parsing produces a [`TypeSystem`]; [`validate`] checks the semantic
//! invariants that the rest of the pipeline relies on.

mod lexer;
mod parser;
mod print;
mod validate;

use std::collections::{BTreeSet, HashSet};

use indexmap::IndexMap;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

pub use parser::{parse_decls, ParseError};
pub use validate::{validate, Diagnostic};

/// A base or composite type expression appearing inside a declaration.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CoreType {
    /// `int`, optionally marked `[@collect g]`.
    Int {
        collect: Option<u32>,
    },
    Float,
    /// Reference to a declared type.
    Named(String),
    /// Parenthesized product `(a * b * ...)` nested inside another type.
    Product(Vec<CoreType>),
}

impl CoreType {
    fn visit_refs<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            CoreType::Named(n) => out.push(n),
            CoreType::Product(items) => items.iter().for_each(|t| t.visit_refs(out)),
            CoreType::Int { .. } | CoreType::Float => {}
        }
    }

    fn visit_groups(&self, out: &mut BTreeSet<u32>) {
        match self {
            CoreType::Int { collect: Some(g) } => {
                out.insert(*g);
            }
            CoreType::Product(items) => items.iter().for_each(|t| t.visit_groups(out)),
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constructor {
    pub name: String,
    /// Top-level product components, in declaration order. Empty for
    /// nullary constructors.
    pub args: Vec<CoreType>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeBody {
    Core(CoreType),
    Sum(Vec<Constructor>),
}

/// Comparison used by a normalized linear predicate `coef * x + constant REL 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Eq,
    Le,
}

/// `coef * x + constant (= | <=) 0` over the single value of a scalar type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LinearPredicate {
    pub coef: i64,
    pub constant: i64,
    pub rel: Relation,
}

impl LinearPredicate {
    pub fn holds(&self, x: i64) -> bool {
        let lhs = self.coef as i128 * x as i128 + self.constant as i128;
        match self.rel {
            Relation::Eq => lhs == 0,
            Relation::Le => lhs <= 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintAtom {
    AllDiff { group: u32 },
    Increasing { group: u32, strict: bool },
    Decreasing { group: u32, strict: bool },
    Arith(LinearPredicate),
}

impl ConstraintAtom {
    pub fn group(&self) -> Option<u32> {
        match *self {
            ConstraintAtom::AllDiff { group }
            | ConstraintAtom::Increasing { group, .. }
            | ConstraintAtom::Decreasing { group, .. } => Some(group),
            ConstraintAtom::Arith(_) => None,
        }
    }

    /// Evaluates a global atom on the list collected for its group.
    /// Arithmetic atoms are not list predicates and always return `true` here.
    pub fn holds_on(&self, values: &[i64]) -> bool {
        match *self {
            ConstraintAtom::AllDiff { .. } => {
                let mut seen = HashSet::with_capacity(values.len());
                values.iter().all(|v| seen.insert(*v))
            }
            ConstraintAtom::Increasing { strict, .. } => {
                values.windows(2).all(|w| if strict { w[0] < w[1] } else { w[0] <= w[1] })
            }
            ConstraintAtom::Decreasing { strict, .. } => {
                values.windows(2).all(|w| if strict { w[0] > w[1] } else { w[0] >= w[1] })
            }
            ConstraintAtom::Arith(_) => true,
        }
    }
}

/// Flat conjunction of constraint atoms.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConstraintExpr {
    pub atoms: Vec<ConstraintAtom>,
}

impl ConstraintExpr {
    pub fn arith(&self) -> impl Iterator<Item = &LinearPredicate> {
        self.atoms.iter().filter_map(|a| match a {
            ConstraintAtom::Arith(p) => Some(p),
            _ => None,
        })
    }

    pub fn globals(&self) -> impl Iterator<Item = &ConstraintAtom> {
        self.atoms.iter().filter(|a| a.group().is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub body: TypeBody,
    pub constraint: Option<ConstraintExpr>,
}

impl TypeDecl {
    /// Type names referenced directly by this declaration.
    pub fn refs(&self) -> Vec<&str> {
        let mut out = Vec::new();
        match &self.body {
            TypeBody::Core(t) => t.visit_refs(&mut out),
            TypeBody::Sum(ctors) => ctors.iter().flat_map(|c| c.args.iter()).for_each(|t| t.visit_refs(&mut out)),
        }
        out
    }

    /// Collect groups that appear directly on atoms of this declaration.
    pub fn own_groups(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        match &self.body {
            TypeBody::Core(t) => t.visit_groups(&mut out),
            TypeBody::Sum(ctors) => ctors.iter().flat_map(|c| c.args.iter()).for_each(|t| t.visit_groups(&mut out)),
        }
        out
    }

    pub fn constructor(&self, name: &str) -> Option<&Constructor> {
        match &self.body {
            TypeBody::Sum(ctors) => ctors.iter().find(|c| c.name == name),
            TypeBody::Core(_) => None,
        }
    }

    /// True for `type t = int [@@satisfying fun x -> <arith>]`.
    pub fn is_constrained_scalar(&self) -> bool {
        matches!(self.body, TypeBody::Core(CoreType::Int { .. }))
            && self.constraint.as_ref().is_some_and(|c| c.arith().next().is_some())
    }
}

/// A set of type declarations, in source order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TypeSystem {
    decls: IndexMap<String, TypeDecl>,
}

impl TypeSystem {
    pub(crate) fn from_decls(decls: IndexMap<String, TypeDecl>) -> Self {
        TypeSystem { decls }
    }

    pub fn decl(&self, name: &str) -> Option<&TypeDecl> {
        self.decls.get(name)
    }

    pub fn decls(&self) -> impl Iterator<Item = &TypeDecl> {
        self.decls.values()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.decls.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.decls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decls.is_empty()
    }

    /// Declared types reachable from `root`, including `root`, in BFS order.
    pub fn reachable(&self, root: &str) -> Vec<&str> {
        let mut seen: Vec<&str> = Vec::new();
        let Some((_, key, _)) = self.decls.get_full(root) else {
            return seen;
        };
        seen.push(key);
        let mut i = 0;
        while i < seen.len() {
            if let Some(d) = self.decls.get(seen[i]) {
                for r in d.refs() {
                    if let Some((_, k, _)) = self.decls.get_full(r) {
                        if !seen.contains(&k.as_str()) {
                            seen.push(k);
                        }
                    }
                }
            }
            i += 1;
        }
        seen
    }

    /// Collect groups occurring on any atom reachable from `root`.
    pub fn reachable_groups(&self, root: &str) -> BTreeSet<u32> {
        self.reachable(root).into_iter().filter_map(|n| self.decl(n)).flat_map(|d| d.own_groups()).collect()
    }

    /// Strongly connected components of the reference graph; the returned
    /// vector maps each declaration index to its component id.
    pub fn components(&self) -> Vec<usize> {
        let mut g = DiGraph::<(), ()>::new();
        let nodes: Vec<_> = (0..self.decls.len()).map(|_| g.add_node(())).collect();
        for (i, d) in self.decls.values().enumerate() {
            for r in d.refs() {
                if let Some(j) = self.decls.get_index_of(r) {
                    g.add_edge(nodes[i], nodes[j], ());
                }
            }
        }
        let mut comp = vec![0; self.decls.len()];
        for (c, scc) in tarjan_scc(&g).into_iter().enumerate() {
            for n in scc {
                comp[n.index()] = c;
            }
        }
        comp
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.decls.get_index_of(name)
    }

    pub fn decl_at(&self, index: usize) -> &TypeDecl {
        &self.decls[index]
    }

    /// Whether values of `name` can contain values of `name`.
    pub fn is_recursive(&self, name: &str) -> bool {
        let Some(idx) = self.index_of(name) else {
            return false;
        };
        let comp = self.components();
        let decl = self.decl_at(idx);
        decl.refs().contains(&name) || comp.iter().enumerate().any(|(j, c)| j != idx && *c == comp[idx])
    }

    /// Whether any reachable declaration carries a constraint.
    pub fn is_constrained(&self, name: &str) -> bool {
        self.reachable(name)
            .into_iter()
            .filter_map(|n| self.decl(n))
            .any(|d| d.constraint.as_ref().is_some_and(|c| !c.atoms.is_empty()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CORPUS: &str = include_str!("../../fixtures/corpus.spec");
    const MISC: &str = include_str!("../../fixtures/misc.spec");

    #[test]
    fn corpus_parses_and_validates() {
        for src in [CORPUS, MISC] {
            let ts = parse_decls(src).unwrap();
            assert!(validate(&ts).is_empty(), "{:?}", validate(&ts));
        }
        let ts = parse_decls(CORPUS).unwrap();
        assert_eq!(ts.len(), 7);
        let names: Vec<&str> = ts.names().collect();
        assert_eq!(names[0], "increasing_list");
        assert_eq!(ts.reachable_groups("quad_tree_x"), BTreeSet::from([1, 2, 3, 4]));
        assert_eq!(ts.reachable_groups("bicollect"), BTreeSet::from([1, 2]));
    }

    #[test]
    fn bare_collect_is_group_one() {
        let ts = parse_decls("type l = N | C of (int[@collect]) * l [@@satisfying alldiff]").unwrap();
        let d = ts.decl("l").unwrap();
        assert_eq!(d.constructor("C").unwrap().args[0], CoreType::Int { collect: Some(1) });
        assert_eq!(d.constraint.as_ref().unwrap().atoms, vec![ConstraintAtom::AllDiff { group: 1 }]);
    }

    #[test]
    fn arithmetic_normalizes_to_linear_predicates() {
        let ts = parse_decls("type p = int [@@satisfying fun x -> x >= 0 && x <= 100]").unwrap();
        let d = ts.decl("p").unwrap();
        assert!(d.is_constrained_scalar());
        let preds: Vec<&LinearPredicate> = d.constraint.as_ref().unwrap().arith().collect();
        assert_eq!(preds.len(), 2);
        for x in -5..=105 {
            let ok = preds.iter().all(|p| p.holds(x));
            assert_eq!(ok, (0..=100).contains(&x), "{x}");
        }
    }

    #[test]
    fn strict_comparisons_are_exact_on_integers() {
        let ts = parse_decls("type p = int [@@satisfying fun x -> x > 2 && x < 7]").unwrap();
        let preds: Vec<LinearPredicate> = ts.decl("p").unwrap().constraint.as_ref().unwrap().arith().copied().collect();
        let sat: Vec<i64> = (0..10).filter(|&x| preds.iter().all(|p| p.holds(x))).collect();
        assert_eq!(sat, vec![3, 4, 5, 6]);
        assert!(parse_decls("type p = int [@@satisfying fun x -> x <> 2]").is_err());
    }

    #[test]
    fn printing_round_trips() {
        for src in [CORPUS, MISC] {
            let ts = parse_decls(src).unwrap();
            let printed = ts.to_string();
            assert_eq!(parse_decls(&printed).unwrap(), ts, "{printed}");
        }
    }

    #[test]
    fn recursion_and_components() {
        let ts = parse_decls(CORPUS).unwrap();
        assert!(ts.is_recursive("quad_tree_x"));
        let comps = ts.components();
        let x = ts.index_of("quad_tree_x").unwrap();
        let y = ts.index_of("quad_tree_y").unwrap();
        assert_eq!(comps[x], comps[y]);
        let misc = parse_decls(MISC).unwrap();
        assert!(!misc.is_recursive("percent"));
        assert!(!misc.is_recursive("point"));
        assert!(misc.is_recursive("plain_tree"));
        assert!(!misc.is_constrained("plain_tree"));
        assert!(misc.is_constrained("graded"));
    }

    #[test]
    fn validation_diagnostics() {
        let cases = [
            ("type t = A of u", "unknown type `u`"),
            ("type t = A of t", "no base constructor"),
            ("type t = N | C of (int[@collect]) * t [@@satisfying fun x -> increasing x 2]", "unknown collect group 2"),
            ("type t = N | C of int * t [@@satisfying fun x -> x >= 1]", "arithmetic constraints"),
            ("type t = N | C of int * t [@@satisfying increasing]", "unknown collect group 1"),
        ];
        for (src, want) in cases {
            let ts = parse_decls(src).unwrap();
            let diags = validate(&ts);
            assert!(diags.iter().any(|d| d.message.contains(want)), "{src}: {diags:?}");
        }
    }

    #[test]
    fn group_reference_through_another_type() {
        let src = "type inner = I of (int[@collect 2])\ntype outer = E | O of inner * outer [@@satisfying fun x -> alldiff x 2]";
        assert!(validate(&parse_decls(src).unwrap()).is_empty());
    }

    #[test]
    fn parse_errors_have_positions() {
        let e = parse_decls("type t =\n  | A of").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_decls("type t = A\ntype t = B").unwrap_err();
        assert!(e.message.contains("duplicate"));
        assert!(parse_decls("type t = A [@@satisfying sorted]").is_err());
        assert!(parse_decls("tipe t = A").is_err());
    }

    #[test]
    fn parenthesized_product_is_one_argument() {
        let ts = parse_decls("type t = A of (int * float) | B of int * float").unwrap();
        let d = ts.decl("t").unwrap();
        assert_eq!(d.constructor("A").unwrap().args.len(), 1);
        assert_eq!(d.constructor("B").unwrap().args.len(), 2);
    }

    #[test]
    fn atoms_on_lists() {
        let inc = ConstraintAtom::Increasing { group: 1, strict: false };
        let sinc = ConstraintAtom::Increasing { group: 1, strict: true };
        let dec = ConstraintAtom::Decreasing { group: 1, strict: true };
        let ad = ConstraintAtom::AllDiff { group: 1 };
        assert!(inc.holds_on(&[1, 1, 2]) && !sinc.holds_on(&[1, 1, 2]));
        assert!(dec.holds_on(&[3, 2, 1]) && !dec.holds_on(&[3, 3]));
        assert!(ad.holds_on(&[3, 1, 2]) && !ad.holds_on(&[3, 1, 3]));
        assert!(inc.holds_on(&[]) && ad.holds_on(&[7]));
    }
}
