//! From declarations to values: shapes are turned into CSPs, solved, and
//! the solutions filled back into the collected positions.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::{Arc, RwLock};

use rand::Rng;

use crate::csp::{Constraint, Csp, Direction, Interval};
use crate::dsl::{ConstraintAtom, ConstraintExpr, Relation, TypeSystem};
use crate::oracle::{build_system, build_system_with, tune, CombSystem, SizeMode, TuneError, TunedGrammar};
use crate::prt::{SampleError, UniformSolver, DEFAULT_K, DEFAULT_MAX_DRAWS};
use crate::rng::RandomStream;
use crate::shape::{
    default_eps, sample_any, sample_shape, Label, Sampled, ShapeError, ShapeTree, SizeWindow, DEFAULT_MAX_ATTEMPTS,
};
use crate::value::GenValue;
use crate::walk::{walk, Event, Plan, ValueTree};

pub const DEFAULT_DOMAIN: Interval = Interval::new(-32768, 32767);

/// Knobs of one generation request.
#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    /// Target size: collected atoms, or constructors for recursive types
    /// without collected atoms. Ignored for non-recursive types.
    pub size: u64,
    /// Half-width of the accepted size window; `None` means `ceil(n/10)`.
    pub eps: Option<u64>,
    /// Domain of collected values and constrained scalars.
    pub domain: Interval,
    /// Per-group overrides of `domain`.
    pub group_domains: BTreeMap<u32, Interval>,
    /// Range of unconstrained `int` fields.
    pub int_range: Interval,
    /// Half-open range of `float` fields.
    pub float_range: (f64, f64),
    pub k: u32,
    pub max_attempts: u32,
    pub max_draws: u64,
    /// Forces a size measure instead of the automatic choice.
    pub size_mode: Option<SizeMode>,
    /// Re-check every generated value against its constraints.
    pub verify: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            size: 10,
            eps: None,
            domain: DEFAULT_DOMAIN,
            group_domains: BTreeMap::new(),
            int_range: DEFAULT_DOMAIN,
            float_range: (-1000.0, 1000.0),
            k: DEFAULT_K,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            max_draws: DEFAULT_MAX_DRAWS,
            size_mode: None,
            verify: true,
        }
    }
}

impl GenConfig {
    pub fn with_size(size: u64) -> Self {
        GenConfig { size, ..GenConfig::default() }
    }

    pub fn window(&self) -> SizeWindow {
        SizeWindow::new(self.size, self.eps.unwrap_or_else(|| default_eps(self.size)))
    }

    pub fn domain_of(&self, group: u32) -> Interval {
        self.group_domains.get(&group).copied().unwrap_or(self.domain)
    }
}

/// A value that does not conform to its type or violates a constraint.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct CheckError(pub String);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenError {
    #[error("validate: {0}")]
    Invalid(String),
    #[error("validate: unknown type `{0}`")]
    UnknownType(String),
    #[error("tune: {0}")]
    Tune(#[from] TuneError),
    #[error("shape: {0}")]
    Shape(#[from] ShapeError),
    #[error("solve: {0}")]
    Solve(#[from] SampleError),
    #[error("fill: queue mismatch: {0}")]
    QueueMismatch(String),
    #[error("check: {0}")]
    Check(#[from] CheckError),
}

impl GenError {
    /// Pipeline stage that failed.
    pub fn stage(&self) -> &'static str {
        match self {
            GenError::Invalid(_) | GenError::UnknownType(_) => "validate",
            GenError::Tune(_) => "tune",
            GenError::Shape(_) => "shape",
            GenError::Solve(_) => "solve",
            GenError::QueueMismatch(_) => "fill",
            GenError::Check(_) => "check",
        }
    }
}

/// Values waiting to be placed into a shape: one FIFO per collect group
/// plus one for constrained scalars, all in depth-first order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolutionQueue {
    groups: BTreeMap<u32, VecDeque<i64>>,
    scalars: VecDeque<i64>,
}

impl SolutionQueue {
    pub fn new() -> Self {
        SolutionQueue::default()
    }

    pub fn push(&mut self, group: u32, v: i64) {
        self.groups.entry(group).or_default().push_back(v);
    }

    pub fn push_scalar(&mut self, v: i64) {
        self.scalars.push_back(v);
    }

    pub fn is_empty(&self) -> bool {
        self.scalars.is_empty() && self.groups.values().all(VecDeque::is_empty)
    }
}

/// CSP of one shape. Variable `i` is the `i`-th constrained position in
/// depth-first order.
#[derive(Debug, Clone)]
pub struct BuiltCsp {
    pub csp: Csp,
    /// Collect group of every variable; `None` for constrained scalars.
    pub var_groups: Vec<Option<u32>>,
}

impl BuiltCsp {
    /// True when no constraint mixes variables of different groups.
    pub fn groups_are_disjoint(&self) -> bool {
        self.csp.constraints().iter().all(|c| {
            let scope = c.scope();
            scope.windows(2).all(|w| self.var_groups[w[0]] == self.var_groups[w[1]])
        })
    }

    pub fn queue(&self, solution: &[i64]) -> SolutionQueue {
        let mut q = SolutionQueue::new();
        for (g, &v) in self.var_groups.iter().zip(solution) {
            match g {
                Some(g) => q.push(*g, v),
                None => q.push_scalar(v),
            }
        }
        q
    }
}

/// Outcome of one generation with its bookkeeping.
#[derive(Debug, Clone)]
pub struct Generated {
    pub value: GenValue,
    /// Size of the accepted shape.
    pub size: u64,
    pub attempts: u32,
}

type GrammarKey = (String, Option<u64>, Option<SizeMode>);

/// Generates values of the types of one validated system. Tuned grammars
/// are cached per (type, size, size mode); everything else is per call.
pub struct Generator {
    ts: TypeSystem,
    plan: Plan,
    grammars: RwLock<HashMap<GrammarKey, Arc<TunedGrammar>>>,
}

impl Generator {
    pub fn new(ts: TypeSystem) -> Result<Generator, GenError> {
        let diags = crate::dsl::validate(&ts);
        if !diags.is_empty() {
            let msg: Vec<String> = diags.iter().map(ToString::to_string).collect();
            return Err(GenError::Invalid(msg.join("; ")));
        }
        let plan = Plan::new(&ts);
        Ok(Generator { ts, plan, grammars: RwLock::new(HashMap::new()) })
    }

    pub fn type_system(&self) -> &TypeSystem {
        &self.ts
    }

    fn system(&self, ty: &str, mode: Option<SizeMode>) -> Result<CombSystem, GenError> {
        let sys = match mode {
            None => build_system(&self.ts, ty),
            Some(m) => build_system_with(&self.ts, ty, m),
        };
        sys.map_err(|e| GenError::Tune(TuneError::Oracle(e)))
    }

    fn check_type(&self, ty: &str) -> Result<(), GenError> {
        match self.ts.decl(ty) {
            Some(_) => Ok(()),
            None => Err(GenError::UnknownType(ty.to_string())),
        }
    }

    /// The grammar used for `ty`: tuned to `n` for recursive types, at
    /// `x = 1` (uniform over the finitely many shapes) otherwise.
    pub fn grammar(&self, ty: &str, n: u64, mode: Option<SizeMode>) -> Result<Arc<TunedGrammar>, GenError> {
        self.check_type(ty)?;
        let recursive = self.ts.is_recursive(ty);
        let key = (ty.to_string(), recursive.then_some(n), mode);
        if let Some(g) = self.grammars.read().expect("grammar cache poisoned").get(&key) {
            return Ok(g.clone());
        }
        let sys = self.system(ty, mode)?;
        let g = if recursive {
            tune(&sys, n)?
        } else {
            TunedGrammar::at(sys, 1.0).map_err(|e| GenError::Tune(TuneError::Oracle(e)))?
        };
        let g = Arc::new(g);
        self.grammars.write().expect("grammar cache poisoned").insert(key, g.clone());
        Ok(g)
    }

    pub fn sample_shape(&self, ty: &str, cfg: &GenConfig, rng: &mut RandomStream) -> Result<Sampled, GenError> {
        let g = self.grammar(ty, cfg.size, cfg.size_mode)?;
        self.sample_with(&g, ty, cfg, rng)
    }

    fn sample_with(
        &self,
        g: &TunedGrammar,
        ty: &str,
        cfg: &GenConfig,
        rng: &mut RandomStream,
    ) -> Result<Sampled, GenError> {
        if self.ts.is_recursive(ty) {
            Ok(sample_shape(g, ty, cfg.window(), rng, cfg.max_attempts)?)
        } else {
            let shape = sample_any(g, ty, rng)?;
            Ok(Sampled { attempts: 1, generated_size: shape.size(), shape })
        }
    }

    pub fn build_csp(&self, ty: &str, shape: &ShapeTree, cfg: &GenConfig) -> Result<BuiltCsp, GenError> {
        build_csp_with(&self.ts, &self.plan, ty, shape, cfg)
    }

    pub fn fill(
        &self,
        ty: &str,
        shape: &ShapeTree,
        queue: &mut SolutionQueue,
        cfg: &GenConfig,
        rng: &mut RandomStream,
    ) -> Result<GenValue, GenError> {
        fill_with(&self.ts, &self.plan, ty, shape, queue, cfg, rng)
    }

    pub fn generate(&self, ty: &str, cfg: &GenConfig, rng: &mut RandomStream) -> Result<GenValue, GenError> {
        self.generate_detailed(ty, cfg, rng).map(|g| g.value)
    }

    pub fn generate_detailed(&self, ty: &str, cfg: &GenConfig, rng: &mut RandomStream) -> Result<Generated, GenError> {
        let g = self.grammar(ty, cfg.size, cfg.size_mode)?;
        let sampled = self.sample_with(&g, ty, cfg, rng)?;
        let built = self.build_csp(ty, &sampled.shape, cfg)?;
        debug_assert!(built.groups_are_disjoint());
        let solution = if built.csp.num_vars() == 0 {
            Vec::new()
        } else {
            UniformSolver::with_max_draws(&built.csp, cfg.k, cfg.max_draws).draw(rng)?
        };
        let mut queue = built.queue(&solution);
        let value = self.fill(ty, &sampled.shape, &mut queue, cfg, rng)?;
        if cfg.verify {
            self.check(ty, &value)?;
        }
        Ok(Generated { value, size: sampled.shape.size(), attempts: sampled.attempts })
    }

    pub fn check(&self, ty: &str, value: &GenValue) -> Result<(), CheckError> {
        check_with(&self.ts, &self.plan, ty, value)
    }

    pub fn collect_values(&self, ty: &str, value: &GenValue) -> Result<BTreeMap<u32, Vec<i64>>, CheckError> {
        collect_with(&self.ts, &self.plan, ty, value)
    }
}

/// Checks that `value` is a value of type `ty` satisfying all constraints.
pub fn check(ts: &TypeSystem, ty: &str, value: &GenValue) -> Result<(), CheckError> {
    check_with(ts, &Plan::new(ts), ty, value)
}

/// Collected integers of `value`, per group, in depth-first order.
pub fn collect_values(ts: &TypeSystem, ty: &str, value: &GenValue) -> Result<BTreeMap<u32, Vec<i64>>, CheckError> {
    collect_with(ts, &Plan::new(ts), ty, value)
}

fn arith_constraints(c: &ConstraintExpr, var: usize) -> impl Iterator<Item = Constraint> + '_ {
    c.arith().map(move |p| match p.rel {
        Relation::Eq => Constraint::LinearEq { terms: vec![(p.coef, var)], constant: -p.constant },
        Relation::Le => Constraint::LinearLe { terms: vec![(p.coef, var)], constant: -p.constant },
    })
}

fn global_constraint(atom: &ConstraintAtom, vars: Vec<usize>) -> Option<Constraint> {
    if vars.len() < 2 {
        return None;
    }
    Some(match *atom {
        ConstraintAtom::AllDiff { .. } => Constraint::AllDiff(vars),
        ConstraintAtom::Increasing { strict, .. } => {
            Constraint::Chain { scope: vars, dir: Direction::Increasing, strict }
        }
        ConstraintAtom::Decreasing { strict, .. } => {
            Constraint::Chain { scope: vars, dir: Direction::Decreasing, strict }
        }
        ConstraintAtom::Arith(_) => return None,
    })
}

struct OpenScope<'a, T> {
    atoms: &'a [ConstraintAtom],
    lists: BTreeMap<u32, Vec<T>>,
}

fn build_csp_with(
    ts: &TypeSystem,
    plan: &Plan,
    ty: &str,
    shape: &ShapeTree,
    cfg: &GenConfig,
) -> Result<BuiltCsp, GenError> {
    let mut csp = Csp::new();
    let mut var_groups: Vec<Option<u32>> = Vec::new();
    let mut scopes: Vec<OpenScope<usize>> = Vec::new();
    let mut pending: Vec<Constraint> = Vec::new();
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    let mut nscalar = 0usize;
    walk(ts, plan, ty, shape, shape.root(), |ev, _| {
        match ev {
            Event::EnterScope(atoms) => scopes.push(OpenScope { atoms, lists: BTreeMap::new() }),
            Event::ExitScope => {
                let s = scopes.pop().expect("scopes are balanced");
                for a in s.atoms {
                    let g = a.group().expect("scope atoms are global");
                    let vars = s.lists.get(&g).cloned().unwrap_or_default();
                    pending.extend(global_constraint(a, vars));
                }
            }
            Event::Collect { group, arith } => {
                let i = counts.entry(group).or_default();
                *i += 1;
                let var = csp.add_var(format!("g{group}_{i}"), cfg.domain_of(group)).map_err(|e| e.to_string())?;
                var_groups.push(Some(group));
                for s in scopes.iter_mut() {
                    s.lists.entry(group).or_default().push(var);
                }
                if let Some(c) = arith {
                    pending.extend(arith_constraints(c, var));
                }
            }
            Event::Scalar(decl) => {
                nscalar += 1;
                let var = csp.add_var(format!("s_{nscalar}"), cfg.domain).map_err(|e| e.to_string())?;
                var_groups.push(None);
                if let Some(c) = &decl.constraint {
                    pending.extend(arith_constraints(c, var));
                }
            }
            Event::Int | Event::Float => {}
        }
        Ok(())
    })
    .map_err(|m| GenError::Invalid(format!("shape does not match `{ty}`: {m}")))?;
    for c in pending {
        csp.add_constraint(c).expect("constraint scopes refer to created variables");
    }
    Ok(BuiltCsp { csp, var_groups })
}

fn fill_with(
    ts: &TypeSystem,
    plan: &Plan,
    ty: &str,
    shape: &ShapeTree,
    queue: &mut SolutionQueue,
    cfg: &GenConfig,
    rng: &mut RandomStream,
) -> Result<GenValue, GenError> {
    let mut leaves: HashMap<u32, GenValue> = HashMap::new();
    let mut mismatch: Option<String> = None;
    walk(ts, plan, ty, shape, shape.root(), |ev, node| {
        let v = match ev {
            Event::Collect { group, .. } => match queue.groups.get_mut(&group).and_then(VecDeque::pop_front) {
                Some(v) => GenValue::Int(v),
                None => {
                    mismatch = Some(format!("group {group} ran out of values"));
                    return Err(String::new());
                }
            },
            Event::Scalar(decl) => match queue.scalars.pop_front() {
                Some(v) => GenValue::Int(v),
                None => {
                    mismatch = Some(format!("no value left for scalar type `{}`", decl.name));
                    return Err(String::new());
                }
            },
            Event::Int => GenValue::Int(rng.random_range(cfg.int_range.lo..=cfg.int_range.hi)),
            Event::Float => {
                let (lo, hi) = cfg.float_range;
                GenValue::Float(if lo < hi { rng.random_range(lo..hi) } else { lo })
            }
            Event::EnterScope(_) | Event::ExitScope => return Ok(()),
        };
        leaves.insert(node, v);
        Ok(())
    })
    .map_err(|m| match mismatch.take() {
        Some(q) => GenError::QueueMismatch(q),
        None => GenError::Invalid(format!("shape does not match `{ty}`: {m}")),
    })?;
    if !queue.is_empty() {
        return Err(GenError::QueueMismatch("values left over after filling".into()));
    }
    Ok(shape_to_value(shape, leaves))
}

/// Builds the value bottom-up; children always have larger ids.
fn shape_to_value(shape: &ShapeTree, mut leaves: HashMap<u32, GenValue>) -> GenValue {
    let n = shape.nodes().len();
    let mut built: Vec<Option<GenValue>> = (0..n).map(|_| None).collect();
    for id in (0..n as u32).rev() {
        let node = shape.node(id);
        let mut args = || node.children.iter().map(|&c| built[c as usize].take().expect("child built")).collect();
        let v = match &node.label {
            Label::Ctor(name) => GenValue::Ctor { name: name.to_string(), args: args() },
            Label::Tuple => GenValue::Tuple(args()),
            _ => leaves.remove(&id).expect("every leaf is filled"),
        };
        built[id as usize] = Some(v);
    }
    built[0].take().expect("root built")
}

fn int_of(v: &GenValue) -> i64 {
    match v {
        GenValue::Int(i) => *i,
        _ => unreachable!("walker checked the node is an integer"),
    }
}

fn check_with(ts: &TypeSystem, plan: &Plan, ty: &str, value: &GenValue) -> Result<(), CheckError> {
    if ts.decl(ty).is_none() {
        return Err(CheckError(format!("unknown type `{ty}`")));
    }
    let mut scopes: Vec<OpenScope<i64>> = Vec::new();
    walk(ts, plan, ty, &ValueTree::new(), value, |ev, node| {
        match ev {
            Event::EnterScope(atoms) => scopes.push(OpenScope { atoms, lists: BTreeMap::new() }),
            Event::ExitScope => {
                let s = scopes.pop().expect("scopes are balanced");
                for a in s.atoms {
                    let g = a.group().expect("scope atoms are global");
                    let vals = s.lists.get(&g).map(Vec::as_slice).unwrap_or(&[]);
                    if !a.holds_on(vals) {
                        return Err(format!("`{a}` violated by {vals:?}"));
                    }
                }
            }
            Event::Collect { group, arith } => {
                let v = int_of(node);
                for s in scopes.iter_mut() {
                    s.lists.entry(group).or_default().push(v);
                }
                if let Some(c) = arith {
                    if let Some(p) = c.arith().find(|p| !p.holds(v)) {
                        return Err(format!("{v} violates `{p}`"));
                    }
                }
            }
            Event::Scalar(decl) => {
                let v = int_of(node);
                if let Some(p) = decl.constraint.iter().flat_map(|c| c.arith()).find(|p| !p.holds(v)) {
                    return Err(format!("{v} violates `{p}` of type `{}`", decl.name));
                }
            }
            Event::Int | Event::Float => {}
        }
        Ok(())
    })
    .map_err(CheckError)
}

fn collect_with(
    ts: &TypeSystem,
    plan: &Plan,
    ty: &str,
    value: &GenValue,
) -> Result<BTreeMap<u32, Vec<i64>>, CheckError> {
    if ts.decl(ty).is_none() {
        return Err(CheckError(format!("unknown type `{ty}`")));
    }
    let mut out: BTreeMap<u32, Vec<i64>> = BTreeMap::new();
    walk(ts, plan, ty, &ValueTree::new(), value, |ev, node| {
        if let Event::Collect { group, .. } = ev {
            out.entry(group).or_default().push(int_of(node));
        }
        Ok(())
    })
    .map_err(CheckError)?;
    Ok(out)
}
