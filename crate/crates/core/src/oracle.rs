//! Combinatorial systems of declared types, evaluation of their generating
//! series, and tuning of the Boltzmann parameter to a target size.
//!
//! A declaration becomes a system of equations whose least non-negative
//! fixed point at `x` gives the generating-series values `A(x)`. Sizes count
//! collected atoms (`z^1` per `[@collect]` leaf) unless the type has no
//! collected atoms at all, in which case every constructor weighs `z^1`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::dsl::{CoreType, TypeBody, TypeSystem};

/// Expression forming the right-hand side of a rule.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Atomic weight `z^k`.
    Z(u32),
    Ref(usize),
    Product(Vec<Expr>),
    Union(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AtomKind {
    Collect(u32),
    Int,
    Float,
    /// The single value of a scalar type restricted by arithmetic constraints.
    Scalar(Arc<str>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleKind {
    /// A declared type; transparent in shapes.
    Type,
    Constructor,
    /// Parenthesized product nested in a constructor argument.
    Tuple,
    Atom(AtomKind),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub name: Arc<str>,
    pub kind: RuleKind,
    pub expr: Expr,
}

/// How sizes are measured when building a system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SizeMode {
    /// Number of `[@collect]` atoms.
    #[default]
    CollectCount,
    /// Number of constructors.
    ConstructorCount,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombSystem {
    rules: Vec<Rule>,
    root: usize,
    mode: SizeMode,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("generating series diverges at x = {0}")]
    Divergent(f64),
    #[error("malformed system: {0}")]
    Malformed(String),
}

/// Builds the system for `root`, picking the size mode automatically:
/// recursive types without any collected atom are measured by constructor
/// count, everything else by collect count.
pub fn build_system(ts: &TypeSystem, root: &str) -> Result<CombSystem, OracleError> {
    let mode = if ts.is_recursive(root) && ts.reachable_groups(root).is_empty() {
        SizeMode::ConstructorCount
    } else {
        SizeMode::CollectCount
    };
    build_system_with(ts, root, mode)
}

pub fn build_system_with(ts: &TypeSystem, root: &str, mode: SizeMode) -> Result<CombSystem, OracleError> {
    if ts.decl(root).is_none() {
        return Err(OracleError::UnknownType(root.to_string()));
    }
    let types = ts.reachable(root);
    let mut b = Builder { mode, rules: Vec::new(), type_index: HashMap::new(), atoms: HashMap::new() };
    for t in &types {
        let idx = b.push(Rule { name: (*t).into(), kind: RuleKind::Type, expr: Expr::Z(0) });
        b.type_index.insert(t.to_string(), idx);
    }
    for t in &types {
        let decl = ts.decl(t).expect("reachable types are declared");
        let tidx = b.type_index[*t];
        let expr = match &decl.body {
            TypeBody::Sum(ctors) => {
                let first = b.rules.len();
                for c in ctors {
                    b.push(Rule { name: c.name.as_str().into(), kind: RuleKind::Constructor, expr: Expr::Z(0) });
                }
                let mut branches = Vec::with_capacity(ctors.len());
                for (i, c) in ctors.iter().enumerate() {
                    let body = if c.args.is_empty() {
                        Expr::Z(0)
                    } else {
                        Expr::Product(c.args.iter().map(|a| b.core(a)).collect::<Result<_, _>>()?)
                    };
                    b.rules[first + i].expr = body;
                    branches.push(match mode {
                        SizeMode::CollectCount => Expr::Ref(first + i),
                        SizeMode::ConstructorCount => Expr::Product(vec![Expr::Z(1), Expr::Ref(first + i)]),
                    });
                }
                Expr::Union(branches)
            }
            TypeBody::Core(CoreType::Int { collect: None }) if decl.is_constrained_scalar() => {
                Expr::Ref(b.atom(AtomKind::Scalar(decl.name.as_str().into())))
            }
            TypeBody::Core(t) => b.core(t)?,
        };
        b.rules[tidx].expr = expr;
    }
    let sys = CombSystem { rules: b.rules, root: 0, mode };
    sys.check()?;
    Ok(sys)
}

struct Builder {
    mode: SizeMode,
    rules: Vec<Rule>,
    type_index: HashMap<String, usize>,
    atoms: HashMap<AtomKind, usize>,
}

impl Builder {
    fn push(&mut self, rule: Rule) -> usize {
        self.rules.push(rule);
        self.rules.len() - 1
    }

    fn atom(&mut self, kind: AtomKind) -> usize {
        if let Some(&i) = self.atoms.get(&kind) {
            return i;
        }
        let (name, weight): (Arc<str>, u32) = match &kind {
            AtomKind::Collect(1) => ("@collect".into(), 1),
            AtomKind::Collect(g) => (format!("@collect {g}").into(), 1),
            AtomKind::Int => ("@int".into(), 0),
            AtomKind::Float => ("@float".into(), 0),
            AtomKind::Scalar(t) => (format!("@scalar {t}").into(), 0),
        };
        let weight = if self.mode == SizeMode::CollectCount { weight } else { 0 };
        let i = self.push(Rule { name, kind: RuleKind::Atom(kind.clone()), expr: Expr::Z(weight) });
        self.atoms.insert(kind, i);
        i
    }

    fn core(&mut self, t: &CoreType) -> Result<Expr, OracleError> {
        Ok(match t {
            CoreType::Int { collect: Some(g) } => Expr::Ref(self.atom(AtomKind::Collect(*g))),
            CoreType::Int { collect: None } => Expr::Ref(self.atom(AtomKind::Int)),
            CoreType::Float => Expr::Ref(self.atom(AtomKind::Float)),
            CoreType::Named(n) => {
                Expr::Ref(*self.type_index.get(n).ok_or_else(|| OracleError::UnknownType(n.clone()))?)
            }
            CoreType::Product(items) => {
                let idx = self.push(Rule { name: "@tuple".into(), kind: RuleKind::Tuple, expr: Expr::Z(0) });
                let body = Expr::Product(items.iter().map(|i| self.core(i)).collect::<Result<_, _>>()?);
                self.rules[idx].expr = body;
                Expr::Ref(idx)
            }
        })
    }
}

const SETTLE_TOL: f64 = 1e-12;
const BLOWUP: f64 = 1e12;
const NEWTON_CAP: usize = 500;

impl CombSystem {
    /// Assembles a system from explicit rules. The root is rule 0.
    pub fn from_rules(rules: Vec<Rule>, mode: SizeMode) -> Result<Self, OracleError> {
        let sys = CombSystem { rules, root: 0, mode };
        sys.check()?;
        Ok(sys)
    }

    fn check(&self) -> Result<(), OracleError> {
        fn walk(e: &Expr, n: usize, top: bool) -> Result<(), OracleError> {
            match e {
                Expr::Z(_) => Ok(()),
                Expr::Ref(i) if *i < n => Ok(()),
                Expr::Ref(i) => Err(OracleError::Malformed(format!("reference {i} out of range"))),
                Expr::Product(items) => items.iter().try_for_each(|i| walk(i, n, false)),
                Expr::Union(_) if !top => Err(OracleError::Malformed("union below rule top level".into())),
                Expr::Union(b) if b.is_empty() => Err(OracleError::Malformed("empty union".into())),
                Expr::Union(b) => b.iter().try_for_each(|i| walk(i, n, false)),
            }
        }
        if self.rules.is_empty() {
            return Err(OracleError::Malformed("no rules".into()));
        }
        self.rules.iter().try_for_each(|r| walk(&r.expr, self.rules.len(), true))
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn mode(&self) -> SizeMode {
        self.mode
    }

    pub fn rule_index(&self, type_name: &str) -> Option<usize> {
        self.rules.iter().position(|r| r.kind == RuleKind::Type && &*r.name == type_name)
    }

    fn apply(&self, x: f64, v: &[f64]) -> Vec<f64> {
        self.rules.iter().map(|r| eval_expr(&r.expr, x, v)).collect()
    }

    /// Least fixed point at `x` by Newton iteration started from zero.
    ///
    /// Below the dominant singularity the iterates increase monotonically
    /// towards the least fixed point and `(I - J)` stays an M-matrix; any
    /// violation of either, a blow-up past 1e12, or failure to settle within
    /// the iteration cap is reported as [`OracleError::Divergent`].
    pub fn eval_series(&self, x: f64) -> Result<Vec<f64>, OracleError> {
        if !x.is_finite() || x < 0.0 {
            return Err(OracleError::Divergent(x));
        }
        let n = self.rules.len();
        let mut v = vec![0.0; n];
        for _ in 0..NEWTON_CAP {
            let fv = self.apply(x, &v);
            let inv = self.resolvent(x, &v).ok_or(OracleError::Divergent(x))?;
            let residual = DVector::from_iterator(n, fv.iter().zip(&v).map(|(f, v)| f - v));
            // Near the singularity the root is almost double and Newton
            // stalls at rounding level; a residual that small is converged.
            if residual.iter().zip(&v).all(|(r, v)| r.abs() <= 8.0 * f64::EPSILON * v.abs().max(1.0))
                && v.iter().any(|&a| a > 0.0)
            {
                return Ok(v);
            }
            let step = &inv * residual;
            let mut settled = true;
            for i in 0..n {
                let next = v[i] + step[i];
                if !next.is_finite() || next > BLOWUP || step[i] < -1e-9 * v[i].abs().max(1.0) {
                    return Err(OracleError::Divergent(x));
                }
                if step[i].abs() > SETTLE_TOL * v[i].abs().max(1.0) {
                    settled = false;
                }
                v[i] = next.max(v[i]);
            }
            if settled {
                return Ok(v);
            }
        }
        Err(OracleError::Divergent(x))
    }

    /// Least fixed point by plain iteration `v <- F(v)` from zero, stopping
    /// when successive iterates differ by less than 1e-12 componentwise.
    /// Much slower than [`CombSystem::eval_series`] near the singularity;
    /// kept as an independent reference.
    pub fn eval_series_iterative(&self, x: f64, max_iter: usize) -> Result<Vec<f64>, OracleError> {
        let mut v = vec![0.0; self.rules.len()];
        for _ in 0..max_iter {
            let next = self.apply(x, &v);
            let mut settled = true;
            for (a, b) in next.iter().zip(&v) {
                if !a.is_finite() || *a > BLOWUP {
                    return Err(OracleError::Divergent(x));
                }
                if (a - b).abs() >= SETTLE_TOL {
                    settled = false;
                }
            }
            v = next;
            if settled {
                return Ok(v);
            }
        }
        Err(OracleError::Divergent(x))
    }

    /// `(I - J(v))^{-1}` when it exists and is entrywise non-negative.
    fn resolvent(&self, x: f64, v: &[f64]) -> Option<DMatrix<f64>> {
        let n = self.rules.len();
        let mut m = DMatrix::<f64>::identity(n, n);
        let mut grad = vec![0.0; n];
        for (r, rule) in self.rules.iter().enumerate() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            grad_expr(&rule.expr, x, v, 1.0, &mut grad);
            for (c, g) in grad.iter().enumerate() {
                m[(r, c)] -= g;
            }
        }
        let inv = m.try_inverse()?;
        let scale = inv.amax().max(1.0);
        if inv.iter().any(|e| !e.is_finite() || *e < -1e-9 * scale) {
            return None;
        }
        Some(inv)
    }

    /// Derivatives `A'(x)` of every rule at a converged point `values`.
    pub fn derivatives(&self, x: f64, values: &[f64]) -> Result<Vec<f64>, OracleError> {
        let inv = self.resolvent(x, values).ok_or(OracleError::Divergent(x))?;
        let zeros = vec![0.0; values.len()];
        let dx =
            DVector::from_iterator(values.len(), self.rules.iter().map(|r| deriv_expr(&r.expr, x, values, &zeros)));
        Ok((inv * dx).iter().copied().collect())
    }

    /// Expected size `x A'(x) / A(x)` of the root under the Boltzmann
    /// distribution of parameter `x`.
    pub fn expected_size(&self, x: f64) -> Result<f64, OracleError> {
        self.expected_size_of(self.root, x)
    }

    pub fn expected_size_of(&self, rule: usize, x: f64) -> Result<f64, OracleError> {
        if x == 0.0 {
            return Ok(self.min_size_at_zero(rule));
        }
        let v = self.eval_series(x)?;
        let d = self.derivatives(x, &v)?;
        if v[rule] <= 0.0 {
            return Err(OracleError::Divergent(x));
        }
        Ok(x * d[rule] / v[rule])
    }

    fn min_size_at_zero(&self, rule: usize) -> f64 {
        // A(0) > 0 means weight-0 objects exist and dominate as x -> 0.
        match self.eval_series(0.0) {
            Ok(v) if v[rule] > 0.0 => 0.0,
            _ => self.expected_size_of(rule, 1e-9).unwrap_or(0.0),
        }
    }

    /// Largest parameter known to converge, found by exponential search and
    /// bisection on convergence of [`CombSystem::eval_series`]. Returns
    /// `None` when the series converges up to the search cap (finite class).
    pub fn singularity(&self) -> Option<f64> {
        let converges = |x: f64| self.eval_series(x).is_ok();
        let (mut lo, mut hi);
        if converges(1.0) {
            lo = 1.0;
            hi = 2.0;
            while converges(hi) {
                lo = hi;
                hi *= 2.0;
                if hi > 1e9 {
                    return None;
                }
            }
        } else {
            hi = 1.0;
            lo = 0.5;
            while !converges(lo) {
                hi = lo;
                lo /= 2.0;
                if lo < 1e-300 {
                    return Some(0.0);
                }
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if converges(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    }
}

fn eval_expr(e: &Expr, x: f64, v: &[f64]) -> f64 {
    match e {
        Expr::Z(k) => x.powi(*k as i32),
        Expr::Ref(i) => v[*i],
        Expr::Product(items) => items.iter().map(|i| eval_expr(i, x, v)).product(),
        Expr::Union(items) => items.iter().map(|i| eval_expr(i, x, v)).sum(),
    }
}

/// Accumulates `scale * dE/dv_i` into `out`.
fn grad_expr(e: &Expr, x: f64, v: &[f64], scale: f64, out: &mut [f64]) {
    match e {
        Expr::Z(_) => {}
        Expr::Ref(i) => out[*i] += scale,
        Expr::Union(items) => items.iter().for_each(|i| grad_expr(i, x, v, scale, out)),
        Expr::Product(items) => {
            let vals: Vec<f64> = items.iter().map(|i| eval_expr(i, x, v)).collect();
            for (k, item) in items.iter().enumerate() {
                let others: f64 = vals.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, a)| a).product();
                grad_expr(item, x, v, scale * others, out);
            }
        }
    }
}

/// Total derivative in `x` given rule derivatives `dv`.
fn deriv_expr(e: &Expr, x: f64, v: &[f64], dv: &[f64]) -> f64 {
    match e {
        Expr::Z(0) => 0.0,
        Expr::Z(k) => *k as f64 * x.powi(*k as i32 - 1),
        Expr::Ref(i) => dv[*i],
        Expr::Union(items) => items.iter().map(|i| deriv_expr(i, x, v, dv)).sum(),
        Expr::Product(items) => {
            let vals: Vec<f64> = items.iter().map(|i| eval_expr(i, x, v)).collect();
            items
                .iter()
                .enumerate()
                .map(|(k, item)| {
                    let others: f64 = vals.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, a)| a).product();
                    deriv_expr(item, x, v, dv) * others
                })
                .sum()
        }
    }
}

/// A system together with a Boltzmann parameter and the derived branch
/// probabilities.
#[derive(Debug, Clone)]
pub struct TunedGrammar {
    system: CombSystem,
    x: f64,
    values: Vec<f64>,
    branch_probs: Vec<Vec<f64>>,
    target: Option<u64>,
    expected: f64,
    singular: bool,
    skew: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TuneError {
    #[error("target size must be at least 1")]
    BadTarget,
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl TunedGrammar {
    /// Fixes the parameter to `x` without any size target.
    pub fn at(system: CombSystem, x: f64) -> Result<Self, OracleError> {
        let values = system.eval_series(x)?;
        let expected = if x > 0.0 { system.expected_size(x)? } else { 0.0 };
        let branch_probs =
            system
                .rules
                .iter()
                .map(|r| match &r.expr {
                    Expr::Union(branches) => {
                        let total: f64 = branches.iter().map(|b| eval_expr(b, x, &values)).sum();
                        branches
                            .iter()
                            .map(|b| {
                                if total > 0.0 {
                                    eval_expr(b, x, &values) / total
                                } else {
                                    1.0 / branches.len() as f64
                                }
                            })
                            .collect()
                    }
                    _ => Vec::new(),
                })
                .collect();
        Ok(TunedGrammar { system, x, values, branch_probs, target: None, expected, singular: false, skew: None })
    }

    pub fn system(&self) -> &CombSystem {
        &self.system
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn series_values(&self) -> &[f64] {
        &self.values
    }

    /// Branch probabilities of rule `rule` (empty unless it is a union).
    pub fn branch_probs(&self, rule: usize) -> &[f64] {
        &self.branch_probs[rule]
    }

    pub fn target(&self) -> Option<u64> {
        self.target
    }

    pub fn expected_size(&self) -> f64 {
        self.expected
    }

    /// Set when the target could not be reached below the singularity; the
    /// grammar is then tuned at the largest convergent parameter.
    pub fn is_singular_undershoot(&self) -> bool {
        self.singular
    }

    /// Multiplies the first branch weight of every union by `factor` at
    /// even constructor depths. Only used to check that the uniformity
    /// tests detect a biased sampler.
    #[doc(hidden)]
    pub fn with_depth_parity_skew(mut self, factor: f64) -> Self {
        self.skew = Some(factor);
        self
    }

    pub(crate) fn skew(&self) -> Option<f64> {
        self.skew
    }
}

/// Tolerance accepted around the target size.
pub fn tune_tolerance(n: u64) -> f64 {
    (0.001 * n as f64).max(0.5)
}

/// Finds `x` with expected root size `n` by bisection below the singularity.
pub fn tune(system: &CombSystem, n: u64) -> Result<TunedGrammar, TuneError> {
    if n == 0 {
        return Err(TuneError::BadTarget);
    }
    let target = n as f64;
    let upper = system.singularity();
    let hi_x = upper.unwrap_or(1e9);
    // Evaluation can fail numerically right at the singularity; such
    // points are treated as lying beyond any finite target.
    let size_at = |x: f64| match system.expected_size(x) {
        Ok(e) => Ok(e),
        Err(OracleError::Divergent(_)) if upper.is_some() => Ok(f64::INFINITY),
        Err(e) => Err(e),
    };
    let e_hi = size_at(hi_x)?;
    if e_hi < target - tune_tolerance(n) {
        let mut g = TunedGrammar::at(system.clone(), hi_x)?;
        g.target = Some(n);
        g.singular = true;
        return Ok(g);
    }
    let (mut lo, mut hi) = (0.0f64, hi_x);
    let mut best = (f64::INFINITY, hi_x);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let e = size_at(mid)?;
        if (e - target).abs() < best.0 {
            best = ((e - target).abs(), mid);
        }
        if e < target {
            lo = mid;
        } else if e > target {
            hi = mid;
        } else {
            break;
        }
    }
    let mut g = TunedGrammar::at(system.clone(), best.1)?;
    g.target = Some(n);
    Ok(g)
}

impl fmt::Display for TunedGrammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.system.rules.iter().map(|r| format!("{:?}", &*r.name)).collect();
        writeln!(f, "names = [|{}|]", names.join("; "))?;
        write!(f, "x = {:.12}", self.x)?;
        if let Some(n) = self.target {
            write!(f, "  target = {n}  expected = {:.6}", self.expected)?;
        }
        if self.singular {
            f.write_str("  (singular: target not reachable)")?;
        }
        writeln!(f)?;
        writeln!(f, "rules =")?;
        for (i, r) in self.system.rules.iter().enumerate() {
            write!(f, "  {i:>3}  {:<16} ", &*r.name)?;
            match &r.expr {
                Expr::Union(branches) => {
                    f.write_str("Union [")?;
                    for (j, b) in branches.iter().enumerate() {
                        if j > 0 {
                            f.write_str(";")?;
                        }
                        write!(f, " ({:.12}, {})", self.branch_probs[i][j], ExprDisplay(b))?;
                    }
                    f.write_str(" ]")?;
                }
                e => write!(f, "{}", ExprDisplay(e))?,
            }
            writeln!(f, "    value = {:.12}", self.values[i])?;
        }
        Ok(())
    }
}

struct ExprDisplay<'a>(&'a Expr);

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Expr::Z(k) => write!(f, "Z {k}"),
            Expr::Ref(i) => write!(f, "Ref {i}"),
            Expr::Product(items) | Expr::Union(items) => {
                f.write_str(if matches!(self.0, Expr::Product(_)) { "Product [" } else { "Union [" })?;
                for (j, it) in items.iter().enumerate() {
                    if j > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{}", ExprDisplay(it))?;
                }
                f.write_str("]")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_decls;

    fn system(src: &str, root: &str) -> CombSystem {
        build_system(&parse_decls(src).unwrap(), root).unwrap()
    }

    fn list() -> CombSystem {
        system("type l = N | C of (int[@collect]) * l", "l")
    }

    fn tree() -> CombSystem {
        system("type t = L | N of t * (int[@collect]) * t", "t")
    }

    #[test]
    fn closed_forms() {
        let (l, t) = (list(), tree());
        for i in 1..=20 {
            let x = 0.245 * i as f64 / 20.0;
            let lv = l.eval_series(x).unwrap()[l.root()];
            let tv = t.eval_series(x).unwrap()[t.root()];
            assert!((lv - 1.0 / (1.0 - x)).abs() < 1e-9);
            assert!((tv - (1.0 - (1.0 - 4.0 * x).sqrt()) / (2.0 * x)).abs() < 1e-9);
        }
    }

    #[test]
    fn newton_matches_plain_iteration() {
        let t = tree();
        for x in [0.05, 0.1, 0.2] {
            let a = t.eval_series(x).unwrap();
            let b = t.eval_series_iterative(x, 1_000_000).unwrap();
            for (p, q) in a.iter().zip(&b) {
                assert!((p - q).abs() < 1e-9, "{x}: {p} vs {q}");
            }
        }
    }

    #[test]
    fn singularities() {
        assert!((list().singularity().unwrap() - 1.0).abs() < 1e-6);
        assert!((tree().singularity().unwrap() - 0.25).abs() < 1e-6);
        assert!(tree().eval_series(0.3).is_err());
        let finite = system("type p = int * float", "p");
        assert_eq!(finite.singularity(), None);
    }

    #[test]
    fn list_tuning_is_exact() {
        let l = list();
        for n in [1u64, 3, 10, 100, 1000, 10_000] {
            let g = tune(&l, n).unwrap();
            assert!((g.x() - n as f64 / (n as f64 + 1.0)).abs() < 1e-6, "{n}: {}", g.x());
            assert!((g.expected_size() - n as f64).abs() <= tune_tolerance(n));
        }
        assert_eq!(tune(&l, 0).unwrap_err(), TuneError::BadTarget);
    }

    #[test]
    fn expected_size_grows_with_x() {
        let t = tree();
        let sizes: Vec<f64> = (1..20).map(|i| t.expected_size(0.0125 * i as f64).unwrap()).collect();
        assert!(sizes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn bst_branches_approach_one_half() {
        let ts = parse_decls("type bst = Node of bst * (int[@collect]) * bst | Leaf").unwrap();
        let sys = build_system_with(&ts, "bst", SizeMode::ConstructorCount).unwrap();
        let g = tune(&sys, 10_000).unwrap();
        assert!(!g.is_singular_undershoot());
        let p = g.branch_probs(sys.rule_index("bst").unwrap());
        assert_eq!(p.len(), 2);
        assert!(p.iter().all(|q| (q - 0.5).abs() < 1e-3), "{p:?}");
        assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn automatic_size_mode() {
        let ts = parse_decls("type t = Leaf of int | Branch of t * float * t").unwrap();
        assert_eq!(build_system(&ts, "t").unwrap().mode(), SizeMode::ConstructorCount);
        assert_eq!(list().mode(), SizeMode::CollectCount);
        assert!(matches!(build_system(&ts, "nope"), Err(OracleError::UnknownType(_))));
    }
}
