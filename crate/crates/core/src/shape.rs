//! Boltzmann sampling of constructor skeletons with size-window rejection.

use std::fmt;
use std::sync::Arc;

use crate::oracle::{AtomKind, Expr, RuleKind, TunedGrammar};
use crate::rng::RandomStream;

/// Node label of a sampled shape.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Label {
    Ctor(Arc<str>),
    Tuple,
    /// Unfilled collected position of the given group.
    Collect(u32),
    Int,
    Float,
    /// Unfilled value of an arithmetically constrained scalar type.
    Scalar(Arc<str>),
}

impl Label {
    pub fn is_leaf(&self) -> bool {
        matches!(self, Label::Collect(_) | Label::Int | Label::Float | Label::Scalar(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapeNode {
    pub label: Label,
    pub children: Vec<u32>,
}

/// A constructor-labelled tree stored as an arena. Node ids are assigned in
/// depth-first pre-order, so every child id is larger than its parent's.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapeTree {
    nodes: Vec<ShapeNode>,
    size: u64,
}

impl ShapeTree {
    /// Builds a tree from pre-ordered nodes; node 0 is the root.
    pub fn from_nodes(nodes: Vec<ShapeNode>, size: u64) -> Self {
        debug_assert!(!nodes.is_empty());
        ShapeTree { nodes, size }
    }

    pub fn root(&self) -> u32 {
        0
    }

    pub fn node(&self, id: u32) -> &ShapeNode {
        &self.nodes[id as usize]
    }

    pub fn nodes(&self) -> &[ShapeNode] {
        &self.nodes
    }

    /// Total atomic weight: collected atoms, or constructors when the
    /// grammar measures constructor count.
    pub fn size(&self) -> u64 {
        self.size
    }

    /// Leaves labelled `Collect(group)`; pre-order ids make this the
    /// depth-first count.
    pub fn count_collect(&self, group: u32) -> usize {
        self.nodes.iter().filter(|n| n.label == Label::Collect(group)).count()
    }

    /// Ids of nodes in depth-first pre-order.
    pub fn preorder(&self) -> impl Iterator<Item = u32> + '_ {
        0..self.nodes.len() as u32
    }

    /// Parses the s-expression form produced by `Display`.
    pub fn parse_sexpr(text: &str) -> Result<ShapeTree, String> {
        let mut nodes: Vec<ShapeNode> = Vec::new();
        let mut open: Vec<u32> = Vec::new();
        let mut size = 0u64;
        let mut rest = text.trim_start();
        let mut closed_root = false;
        while !rest.is_empty() {
            if closed_root {
                return Err("trailing input after shape".into());
            }
            if let Some(r) = rest.strip_prefix('(') {
                let end = r.find(['(', ')']).unwrap_or(r.len());
                let words: Vec<&str> = r[..end].split_whitespace().collect();
                let label = match words.as_slice() {
                    ["@collect", g] => {
                        size += 1;
                        Label::Collect(g.parse().map_err(|_| format!("bad group `{g}`"))?)
                    }
                    ["@int"] => Label::Int,
                    ["@float"] => Label::Float,
                    ["@tuple"] => Label::Tuple,
                    ["@scalar", t] => Label::Scalar((*t).into()),
                    [c] if !c.starts_with('@') => Label::Ctor((*c).into()),
                    _ => return Err(format!("bad node `{}`", r[..end].trim())),
                };
                let id = nodes.len() as u32;
                if let Some(&p) = open.last() {
                    nodes[p as usize].children.push(id);
                } else if id != 0 {
                    return Err("more than one root".into());
                }
                nodes.push(ShapeNode { label, children: Vec::new() });
                open.push(id);
                rest = r[end..].trim_start();
            } else if let Some(r) = rest.strip_prefix(')') {
                open.pop().ok_or("unbalanced `)`")?;
                closed_root = open.is_empty();
                rest = r.trim_start();
            } else {
                return Err(format!("unexpected input `{}`", rest.chars().take(10).collect::<String>()));
            }
        }
        if nodes.is_empty() || !open.is_empty() {
            return Err("incomplete shape".into());
        }
        Ok(ShapeTree { nodes, size })
    }
}

impl fmt::Display for ShapeTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        enum Step {
            Open(u32),
            Close,
        }
        let mut stack = vec![Step::Open(0)];
        let mut first = true;
        while let Some(step) = stack.pop() {
            match step {
                Step::Close => f.write_str(")")?,
                Step::Open(id) => {
                    if !first {
                        f.write_str(" ")?;
                    }
                    first = false;
                    let node = self.node(id);
                    match &node.label {
                        Label::Ctor(c) => write!(f, "({c}")?,
                        Label::Tuple => f.write_str("(@tuple")?,
                        Label::Collect(g) => write!(f, "(@collect {g}")?,
                        Label::Int => f.write_str("(@int")?,
                        Label::Float => f.write_str("(@float")?,
                        Label::Scalar(t) => write!(f, "(@scalar {t}")?,
                    }
                    stack.push(Step::Close);
                    for &c in node.children.iter().rev() {
                        stack.push(Step::Open(c));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Accepted sizes `[n - eps, n + eps]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeWindow {
    pub n: u64,
    pub eps: u64,
}

impl SizeWindow {
    pub fn new(n: u64, eps: u64) -> Self {
        assert!(n >= 1, "target size must be at least 1");
        SizeWindow { n, eps }
    }

    /// Window with the default tolerance `max(1, ceil(n / 10))`.
    pub fn around(n: u64) -> Self {
        SizeWindow::new(n, default_eps(n))
    }

    pub fn min(&self) -> u64 {
        self.n.saturating_sub(self.eps)
    }

    pub fn max(&self) -> u64 {
        self.n.saturating_add(self.eps)
    }

    pub fn contains(&self, size: u64) -> bool {
        (self.min()..=self.max()).contains(&size)
    }
}

pub fn default_eps(n: u64) -> u64 {
    n.div_ceil(10).max(1)
}

pub const DEFAULT_MAX_ATTEMPTS: u32 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ShapeError {
    #[error("Exhausted: no shape in size window [{min}, {max}] after {attempts} attempts")]
    Exhausted { min: u64, max: u64, attempts: u32 },
    #[error("type `{0}` is not part of the grammar")]
    UnknownType(String),
}

/// An accepted shape and what it took to get it.
#[derive(Debug, Clone)]
pub struct Sampled {
    pub shape: ShapeTree,
    pub attempts: u32,
    /// Atomic weight generated across all attempts, rejected ones included.
    pub generated_size: u64,
}

/// Draws shapes from `tg` starting at type `root` until one falls into the
/// window. Attempts are aborted as soon as their running size exceeds the
/// upper bound.
pub fn sample_shape(
    tg: &TunedGrammar,
    root: &str,
    window: SizeWindow,
    rng: &mut RandomStream,
    max_attempts: u32,
) -> Result<Sampled, ShapeError> {
    sample_bounded(tg, root, window.min(), window.max(), rng, max_attempts)
}

/// Draws one shape with no size restriction. Only meaningful for grammars
/// whose class is finite or tuned strictly below the singularity.
pub fn sample_any(tg: &TunedGrammar, root: &str, rng: &mut RandomStream) -> Result<ShapeTree, ShapeError> {
    sample_bounded(tg, root, 0, u64::MAX, rng, 1).map(|s| s.shape)
}

fn sample_bounded(
    tg: &TunedGrammar,
    root: &str,
    min: u64,
    max: u64,
    rng: &mut RandomStream,
    max_attempts: u32,
) -> Result<Sampled, ShapeError> {
    let start = tg.system().rule_index(root).ok_or_else(|| ShapeError::UnknownType(root.to_string()))?;
    let mut generated = 0u64;
    let mut stack = Vec::new();
    for attempt in 1..=max_attempts {
        let (outcome, size) = attempt_once(tg, start, max, rng, &mut stack);
        generated += size;
        if let Some(nodes) = outcome {
            if size >= min {
                return Ok(Sampled { shape: ShapeTree { nodes, size }, attempts: attempt, generated_size: generated });
            }
        }
    }
    Err(ShapeError::Exhausted { min, max, attempts: max_attempts })
}

struct Work<'a> {
    expr: &'a Expr,
    parent: Option<u32>,
    depth: u32,
}

/// One Boltzmann draw. Returns the nodes (or `None` when the running size
/// exceeded `max`) and the size reached.
fn attempt_once<'a>(
    tg: &'a TunedGrammar,
    start: usize,
    max: u64,
    rng: &mut RandomStream,
    stack: &mut Vec<Work<'a>>,
) -> (Option<Vec<ShapeNode>>, u64) {
    let rules = tg.system().rules();
    let skew = tg.skew();
    let mut nodes: Vec<ShapeNode> = Vec::new();
    let mut size = 0u64;
    stack.clear();
    // next rule reference to expand: (rule, parent node, constructor depth)
    let mut pending: Option<(usize, Option<u32>, u32)> = Some((start, None, 0));

    loop {
        let (rule_idx, parent, depth) = match pending.take() {
            Some(p) => p,
            None => {
                let Some(w) = stack.pop() else { break };
                match w.expr {
                    Expr::Z(k) => {
                        size += *k as u64;
                        if size > max {
                            return (None, size);
                        }
                        continue;
                    }
                    Expr::Product(items) => {
                        for it in items.iter().rev() {
                            stack.push(Work { expr: it, parent: w.parent, depth: w.depth });
                        }
                        continue;
                    }
                    Expr::Union(_) => unreachable!("unions only occur at rule top level"),
                    Expr::Ref(i) => (*i, w.parent, w.depth),
                }
            }
        };
        let rule = &rules[rule_idx];
        let label = match &rule.kind {
            RuleKind::Type => None,
            RuleKind::Constructor => Some(Label::Ctor(rule.name.clone())),
            RuleKind::Tuple => Some(Label::Tuple),
            RuleKind::Atom(AtomKind::Collect(g)) => Some(Label::Collect(*g)),
            RuleKind::Atom(AtomKind::Int) => Some(Label::Int),
            RuleKind::Atom(AtomKind::Float) => Some(Label::Float),
            RuleKind::Atom(AtomKind::Scalar(t)) => Some(Label::Scalar(t.clone())),
        };
        let (parent, depth) = match label {
            Some(label) => {
                let id = nodes.len() as u32;
                if let Some(p) = parent {
                    nodes[p as usize].children.push(id);
                }
                let child_depth = if matches!(rule.kind, RuleKind::Constructor) { depth + 1 } else { depth };
                nodes.push(ShapeNode { label, children: Vec::new() });
                (Some(id), child_depth)
            }
            None => (parent, depth),
        };
        match &rule.expr {
            Expr::Union(branches) => {
                let probs = tg.branch_probs(rule_idx);
                let b = choose_branch(probs, skew.filter(|_| depth % 2 == 0), rng);
                stack.push(Work { expr: &branches[b], parent, depth });
            }
            e => stack.push(Work { expr: e, parent, depth }),
        }
    }
    (Some(nodes), size)
}

fn choose_branch(probs: &[f64], skew: Option<f64>, rng: &mut RandomStream) -> usize {
    let u = rng.next_uniform();
    match skew {
        None => {
            let mut acc = 0.0;
            for (i, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    return i;
                }
            }
        }
        Some(factor) => {
            let total: f64 = probs[0] * factor + probs[1..].iter().sum::<f64>();
            let mut acc = 0.0;
            for (i, p) in probs.iter().enumerate() {
                acc += if i == 0 { p * factor } else { *p } / total;
                if u < acc {
                    return i;
                }
            }
        }
    }
    // rounding: fall back to the last branch with positive probability
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}
