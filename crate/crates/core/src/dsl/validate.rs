use std::collections::HashSet;
use std::fmt;

use super::{ConstraintAtom, CoreType, TypeBody, TypeDecl, TypeSystem};

/// A semantic problem found in one declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub decl: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "type {}: {}", self.decl, self.message)
    }
}

/// Checks the semantic invariants of a parsed type system. An empty result
/// means the system is valid.
pub fn validate(ts: &TypeSystem) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut diag = |decl: &TypeDecl, message: String| {
        out.push(Diagnostic { decl: decl.name.clone(), message });
    };

    for d in ts.decls() {
        let mut unknown: Vec<&str> = d.refs().into_iter().filter(|r| ts.decl(r).is_none()).collect();
        unknown.dedup();
        for r in unknown {
            diag(d, format!("unknown type `{r}`"));
        }
    }

    let productive = productive_types(ts);
    for d in ts.decls() {
        if !productive.contains(d.name.as_str()) {
            diag(d, "no base constructor: every constructor refers back to a recursive type".into());
        }
    }

    for d in ts.decls() {
        let Some(c) = &d.constraint else { continue };
        let groups = ts.reachable_groups(&d.name);
        let mut reported = HashSet::new();
        for atom in &c.atoms {
            match atom {
                ConstraintAtom::Arith(_) => {
                    if !matches!(d.body, TypeBody::Core(CoreType::Int { .. })) {
                        diag(d, "arithmetic constraints require the declaration to be a single `int`".into());
                    }
                }
                _ => {
                    let g = atom.group().unwrap_or(1);
                    if !groups.contains(&g) && reported.insert(g) {
                        diag(d, format!("unknown collect group {g}"));
                    }
                }
            }
        }
    }
    out
}

/// Least fixpoint of "has a finite inhabitant".
fn productive_types(ts: &TypeSystem) -> HashSet<&str> {
    let mut done: HashSet<&str> = HashSet::new();
    loop {
        let before = done.len();
        for d in ts.decls() {
            if done.contains(d.name.as_str()) {
                continue;
            }
            let ok = match &d.body {
                TypeBody::Core(t) => core_productive(t, &done),
                TypeBody::Sum(ctors) => ctors.iter().any(|c| c.args.iter().all(|a| core_productive(a, &done))),
            };
            if ok {
                done.insert(d.name.as_str());
            }
        }
        if done.len() == before {
            return done;
        }
    }
}

fn core_productive(t: &CoreType, done: &HashSet<&str>) -> bool {
    match t {
        CoreType::Int { .. } | CoreType::Float => true,
        CoreType::Named(n) => done.contains(n.as_str()),
        CoreType::Product(items) => items.iter().all(|i| core_productive(i, done)),
    }
}
