//! Type-directed depth-first traversal of shapes and values.
//!
//! Shapes only record constructors, tuples and leaves, so the declarations
//! are walked alongside to know which type every node belongs to. This is
//! what decides where a constraint scope starts and ends.

use std::collections::HashMap;
use std::marker::PhantomData;

use crate::dsl::{ConstraintAtom, ConstraintExpr, CoreType, TypeBody, TypeDecl, TypeSystem};
use crate::shape::{Label, ShapeTree};
use crate::value::GenValue;

pub(crate) enum NodeKind<'a> {
    Ctor(&'a str),
    Tuple,
    Int,
    Float,
}

pub(crate) trait Tree {
    type Node: Copy;
    fn kind(&self, n: Self::Node) -> NodeKind<'_>;
    fn arity(&self, n: Self::Node) -> usize;
    fn child(&self, n: Self::Node, i: usize) -> Self::Node;
}

impl Tree for ShapeTree {
    type Node = u32;

    fn kind(&self, n: u32) -> NodeKind<'_> {
        match &self.node(n).label {
            Label::Ctor(c) => NodeKind::Ctor(c),
            Label::Tuple => NodeKind::Tuple,
            Label::Float => NodeKind::Float,
            Label::Collect(_) | Label::Int | Label::Scalar(_) => NodeKind::Int,
        }
    }

    fn arity(&self, n: u32) -> usize {
        self.node(n).children.len()
    }

    fn child(&self, n: u32, i: usize) -> u32 {
        self.node(n).children[i]
    }
}

/// Walks a value by reference; nodes are the value's subterms.
pub(crate) struct ValueTree<'v>(PhantomData<&'v GenValue>);

impl ValueTree<'_> {
    pub(crate) fn new() -> Self {
        ValueTree(PhantomData)
    }
}

impl<'v> Tree for ValueTree<'v> {
    type Node = &'v GenValue;

    fn kind(&self, n: &'v GenValue) -> NodeKind<'_> {
        match n {
            GenValue::Ctor { name, .. } => NodeKind::Ctor(name),
            GenValue::Tuple(_) => NodeKind::Tuple,
            GenValue::Int(_) => NodeKind::Int,
            GenValue::Float(_) => NodeKind::Float,
        }
    }

    fn arity(&self, n: &'v GenValue) -> usize {
        n.children().len()
    }

    fn child(&self, n: &'v GenValue, i: usize) -> &'v GenValue {
        &n.children()[i]
    }
}

/// Per-system data needed to place constraint scopes.
#[derive(Debug, Clone)]
pub(crate) struct Plan {
    /// Strongly connected component of every declaration.
    comps: Vec<usize>,
    /// Deduplicated global atoms of each component that has any.
    scope_atoms: HashMap<usize, Vec<ConstraintAtom>>,
}

impl Plan {
    pub(crate) fn new(ts: &TypeSystem) -> Plan {
        let comps = ts.components();
        let mut scope_atoms: HashMap<usize, Vec<ConstraintAtom>> = HashMap::new();
        for (i, d) in ts.decls().enumerate() {
            let Some(c) = &d.constraint else { continue };
            for a in c.globals() {
                let list = scope_atoms.entry(comps[i]).or_default();
                if !list.contains(a) {
                    list.push(*a);
                }
            }
        }
        Plan { comps, scope_atoms }
    }
}

pub(crate) enum Event<'a> {
    /// A constraint scope starts; the atoms apply to every collected value
    /// until the matching `ExitScope`.
    EnterScope(&'a [ConstraintAtom]),
    ExitScope,
    Collect {
        group: u32,
        arith: Option<&'a ConstraintExpr>,
    },
    Int,
    Float,
    /// Value of a scalar type restricted by arithmetic constraints.
    Scalar(&'a TypeDecl),
}

enum Frame<'a, N> {
    Named(&'a str, N, Option<usize>),
    Core(&'a CoreType, N, usize),
    Exit(N),
}

/// Visits `tree` as a value of type `root`, calling `f` for every event in
/// depth-first, left-to-right order. Errors describe the first node that
/// does not fit the declarations.
pub(crate) fn walk<'a, T: Tree>(
    ts: &'a TypeSystem,
    plan: &'a Plan,
    root: &'a str,
    tree: &T,
    start: T::Node,
    mut f: impl FnMut(Event<'a>, T::Node) -> Result<(), String>,
) -> Result<(), String> {
    let mut stack: Vec<Frame<'a, T::Node>> = vec![Frame::Named(root, start, None)];
    while let Some(frame) = stack.pop() {
        match frame {
            Frame::Exit(n) => f(Event::ExitScope, n)?,
            Frame::Named(name, n, ctx) => {
                let idx = ts.index_of(name).ok_or_else(|| format!("unknown type `{name}`"))?;
                let decl = ts.decl_at(idx);
                let comp = plan.comps[idx];
                if ctx != Some(comp) {
                    if let Some(atoms) = plan.scope_atoms.get(&comp) {
                        f(Event::EnterScope(atoms), n)?;
                        stack.push(Frame::Exit(n));
                    }
                }
                let arith = decl.constraint.as_ref().filter(|c| c.arith().next().is_some());
                match (&decl.body, arith) {
                    (TypeBody::Core(CoreType::Int { collect }), Some(c)) => {
                        expect_int(tree, n, name)?;
                        match collect {
                            Some(g) => f(Event::Collect { group: *g, arith: Some(c) }, n)?,
                            None => f(Event::Scalar(decl), n)?,
                        }
                    }
                    (TypeBody::Core(t), _) => stack.push(Frame::Core(t, n, comp)),
                    (TypeBody::Sum(ctors), _) => {
                        let NodeKind::Ctor(cname) = tree.kind(n) else {
                            return Err(format!("expected a constructor of `{name}`"));
                        };
                        let ctor = ctors
                            .iter()
                            .find(|c| c.name == cname)
                            .ok_or_else(|| format!("`{cname}` is not a constructor of `{name}`"))?;
                        if tree.arity(n) != ctor.args.len() {
                            return Err(format!(
                                "`{cname}` takes {} arguments, found {}",
                                ctor.args.len(),
                                tree.arity(n)
                            ));
                        }
                        for (i, a) in ctor.args.iter().enumerate().rev() {
                            stack.push(Frame::Core(a, tree.child(n, i), comp));
                        }
                    }
                }
            }
            Frame::Core(t, n, ctx) => match t {
                CoreType::Int { collect } => {
                    expect_int(tree, n, "int")?;
                    match collect {
                        Some(g) => f(Event::Collect { group: *g, arith: None }, n)?,
                        None => f(Event::Int, n)?,
                    }
                }
                CoreType::Float => {
                    if !matches!(tree.kind(n), NodeKind::Float) {
                        return Err("expected a float".into());
                    }
                    f(Event::Float, n)?
                }
                CoreType::Named(name) => stack.push(Frame::Named(name, n, Some(ctx))),
                CoreType::Product(items) => {
                    if !matches!(tree.kind(n), NodeKind::Tuple) || tree.arity(n) != items.len() {
                        return Err(format!("expected a tuple of {} components", items.len()));
                    }
                    for (i, it) in items.iter().enumerate().rev() {
                        stack.push(Frame::Core(it, tree.child(n, i), ctx));
                    }
                }
            },
        }
    }
    Ok(())
}

fn expect_int<T: Tree>(tree: &T, n: T::Node, what: &str) -> Result<(), String> {
    match tree.kind(n) {
        NodeKind::Int => Ok(()),
        _ => Err(format!("expected an integer for `{what}`")),
    }
}
