//! Finite-domain constraint problems over integer intervals.

mod propagate;
pub mod text;

use std::fmt;

pub use propagate::Unsat;
pub use text::{parse_csp, CspParseError};

/// Closed integer interval `[lo, hi]`; empty when `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: i64,
    pub hi: i64,
}

impl Interval {
    pub const fn new(lo: i64, hi: i64) -> Self {
        Interval { lo, hi }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn contains(&self, v: i64) -> bool {
        self.lo <= v && v <= self.hi
    }

    /// Number of integers in the interval.
    pub fn width(&self) -> u64 {
        if self.is_empty() {
            0
        } else {
            (self.hi as i128 - self.lo as i128 + 1) as u64
        }
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        self.is_empty() || (other.lo <= self.lo && self.hi <= other.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Constraint {
    AllDiff(Vec<usize>),
    /// Ordered sequence; `strict` forbids ties.
    Chain {
        scope: Vec<usize>,
        dir: Direction,
        strict: bool,
    },
    /// `ys` is `xs` sorted in non-decreasing order.
    Sort {
        xs: Vec<usize>,
        ys: Vec<usize>,
    },
    /// `sum(a_i * x_i) = constant`
    LinearEq {
        terms: Vec<(i64, usize)>,
        constant: i64,
    },
    /// `sum(a_i * x_i) <= constant`
    LinearLe {
        terms: Vec<(i64, usize)>,
        constant: i64,
    },
}

impl Constraint {
    pub fn scope(&self) -> Vec<usize> {
        match self {
            Constraint::AllDiff(s) | Constraint::Chain { scope: s, .. } => s.clone(),
            Constraint::Sort { xs, ys } => xs.iter().chain(ys).copied().collect(),
            Constraint::LinearEq { terms, .. } | Constraint::LinearLe { terms, .. } => {
                terms.iter().map(|t| t.1).collect()
            }
        }
    }

    /// Exact semantics on a full assignment.
    /// Checkable without allocating; such constraints are tested first.
    fn is_cheap(&self) -> bool {
        !matches!(self, Constraint::AllDiff(_) | Constraint::Sort { .. })
    }

    pub fn holds(&self, t: &[i64]) -> bool {
        match self {
            Constraint::AllDiff(scope) => {
                let mut vals: Vec<i64> = scope.iter().map(|&i| t[i]).collect();
                vals.sort_unstable();
                vals.windows(2).all(|w| w[0] != w[1])
            }
            Constraint::Chain { scope, dir, strict } => scope.windows(2).all(|w| {
                let (a, b) = (t[w[0]], t[w[1]]);
                match (dir, strict) {
                    (Direction::Increasing, false) => a <= b,
                    (Direction::Increasing, true) => a < b,
                    (Direction::Decreasing, false) => a >= b,
                    (Direction::Decreasing, true) => a > b,
                }
            }),
            Constraint::Sort { xs, ys } => {
                let mut sorted: Vec<i64> = xs.iter().map(|&i| t[i]).collect();
                sorted.sort_unstable();
                sorted.iter().zip(ys).all(|(v, &y)| *v == t[y])
            }
            Constraint::LinearEq { terms, constant } => linear_sum(terms, t) == *constant as i128,
            Constraint::LinearLe { terms, constant } => linear_sum(terms, t) <= *constant as i128,
        }
    }
}

fn linear_sum(terms: &[(i64, usize)], t: &[i64]) -> i128 {
    terms.iter().map(|&(a, i)| a as i128 * t[i] as i128).sum()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CspError {
    #[error("variable index {0} out of range")]
    UnknownVar(usize),
    #[error("sort constraint needs lists of equal length")]
    SortLength,
    #[error("empty domain {1} for variable {0}")]
    EmptyDomain(String, Interval),
}

/// Variables with interval domains and a list of constraints.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Csp {
    names: Vec<String>,
    domains: Vec<Interval>,
    constraints: Vec<Constraint>,
}

impl Csp {
    pub fn new() -> Self {
        Csp::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, domain: Interval) -> Result<usize, CspError> {
        let name = name.into();
        if domain.is_empty() {
            return Err(CspError::EmptyDomain(name, domain));
        }
        self.names.push(name);
        self.domains.push(domain);
        Ok(self.domains.len() - 1)
    }

    /// Adds a constraint after checking its scope. Linear terms over the same
    /// variable are merged and zero coefficients dropped.
    pub fn add_constraint(&mut self, c: Constraint) -> Result<(), CspError> {
        if let Some(&bad) = c.scope().iter().find(|&&i| i >= self.domains.len()) {
            return Err(CspError::UnknownVar(bad));
        }
        let c = match c {
            Constraint::Sort { xs, ys } if xs.len() != ys.len() => return Err(CspError::SortLength),
            Constraint::LinearEq { terms, constant } => Constraint::LinearEq { terms: merge_terms(terms), constant },
            Constraint::LinearLe { terms, constant } => Constraint::LinearLe { terms: merge_terms(terms), constant },
            c => c,
        };
        self.constraints.push(c);
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.domains.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn domains(&self) -> &[Interval] {
        &self.domains
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Whether `t` lies in the domains and satisfies every constraint.
    pub fn is_satisfied(&self, t: &[i64]) -> bool {
        t.len() == self.domains.len()
            && t.iter().zip(&self.domains).all(|(v, d)| d.contains(*v))
            && self.constraints.iter().filter(|c| c.is_cheap()).all(|c| c.holds(t))
            && self.constraints.iter().filter(|c| !c.is_cheap()).all(|c| c.holds(t))
    }

    /// Returns a copy whose domains are reduced to the propagation fixpoint.
    pub fn propagate(&self) -> Result<Csp, Unsat> {
        let mut domains = self.domains.clone();
        self.propagate_domains(&mut domains)?;
        Ok(Csp { names: self.names.clone(), domains, constraints: self.constraints.clone() })
    }

    /// Variables whose value is a function of the others: the outputs of
    /// `sort` constraints whose inputs are not themselves outputs.
    pub fn derived_vars(&self) -> Vec<bool> {
        let mut derived = vec![false; self.domains.len()];
        for c in &self.constraints {
            if let Constraint::Sort { ys, .. } = c {
                ys.iter().for_each(|&y| derived[y] = true);
            }
        }
        for c in &self.constraints {
            if let Constraint::Sort { xs, ys } = c {
                if xs.iter().any(|&x| derived[x]) {
                    ys.iter().for_each(|&y| derived[y] = false);
                }
            }
        }
        derived
    }

    /// Fills derived variables of `t` from the decision variables.
    pub fn complete(&self, t: &mut [i64], derived: &[bool]) {
        for c in &self.constraints {
            if let Constraint::Sort { xs, ys } = c {
                if ys.iter().all(|&y| derived[y]) {
                    let mut vals: Vec<i64> = xs.iter().map(|&i| t[i]).collect();
                    vals.sort_unstable();
                    for (&y, v) in ys.iter().zip(vals) {
                        t[y] = v;
                    }
                }
            }
        }
    }

    /// Every solution, found by scanning all decision-variable assignments
    /// in the declared domains. Returns `None` when the scan would exceed
    /// `max_points` assignments.
    pub fn enumerate_solutions(&self, max_points: u128) -> Option<Vec<Vec<i64>>> {
        let derived = self.derived_vars();
        let free: Vec<usize> = (0..self.num_vars()).filter(|&i| !derived[i]).collect();
        let mut points: u128 = 1;
        for &i in &free {
            let d = self.domains[i];
            points = points.checked_mul((d.hi as i128 - d.lo as i128 + 1).max(0) as u128)?;
        }
        if points > max_points {
            return None;
        }
        let mut out = Vec::new();
        if self.domains.iter().any(Interval::is_empty) {
            return Some(out);
        }
        let mut t: Vec<i64> = self.domains.iter().map(|d| d.lo).collect();
        loop {
            self.complete(&mut t, &derived);
            if self.is_satisfied(&t) {
                out.push(t.clone());
            }
            let mut j = 0;
            loop {
                let Some(&i) = free.get(j) else { return Some(out) };
                if t[i] < self.domains[i].hi {
                    t[i] += 1;
                    break;
                }
                t[i] = self.domains[i].lo;
                j += 1;
            }
        }
    }

    /// Splits the variables into independent groups (connected through
    /// shared constraints). Each group lists its variables and constraint
    /// indices.
    pub fn components(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let n = self.domains.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for c in &self.constraints {
            let s = c.scope();
            if let Some(&first) = s.first() {
                for &v in &s[1..] {
                    let (a, b) = (find(&mut parent, first), find(&mut parent, v));
                    parent[a] = b;
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, (Vec<usize>, Vec<usize>)> = Default::default();
        for v in 0..n {
            let r = find(&mut parent, v);
            groups.entry(r).or_default().0.push(v);
        }
        for (ci, c) in self.constraints.iter().enumerate() {
            if let Some(&v) = c.scope().first() {
                let r = find(&mut parent, v);
                groups.get_mut(&r).expect("scoped variable has a group").1.push(ci);
            }
        }
        let mut out: Vec<_> = groups.into_values().collect();
        // constant constraints (empty scope) are attached to every group's check via the first group
        let unscoped: Vec<usize> =
            self.constraints.iter().enumerate().filter(|(_, c)| c.scope().is_empty()).map(|(i, _)| i).collect();
        if let Some(first) = out.first_mut() {
            first.1.extend(unscoped);
        }
        out
    }

    /// Sub-problem over `vars` with the listed constraints, renumbered.
    pub fn restrict(&self, vars: &[usize], constraints: &[usize]) -> Csp {
        let mut map = vec![usize::MAX; self.domains.len()];
        for (new, &old) in vars.iter().enumerate() {
            map[old] = new;
        }
        let remap = |s: &[usize]| s.iter().map(|&i| map[i]).collect::<Vec<_>>();
        let constraints = constraints
            .iter()
            .map(|&ci| match &self.constraints[ci] {
                Constraint::AllDiff(s) => Constraint::AllDiff(remap(s)),
                Constraint::Chain { scope, dir, strict } => {
                    Constraint::Chain { scope: remap(scope), dir: *dir, strict: *strict }
                }
                Constraint::Sort { xs, ys } => Constraint::Sort { xs: remap(xs), ys: remap(ys) },
                Constraint::LinearEq { terms, constant } => Constraint::LinearEq {
                    terms: terms.iter().map(|&(a, i)| (a, map[i])).collect(),
                    constant: *constant,
                },
                Constraint::LinearLe { terms, constant } => Constraint::LinearLe {
                    terms: terms.iter().map(|&(a, i)| (a, map[i])).collect(),
                    constant: *constant,
                },
            })
            .collect();
        Csp {
            names: vars.iter().map(|&i| self.names[i].clone()).collect(),
            domains: vars.iter().map(|&i| self.domains[i]).collect(),
            constraints,
        }
    }
}

fn merge_terms(terms: Vec<(i64, usize)>) -> Vec<(i64, usize)> {
    let mut out: Vec<(i64, usize)> = Vec::with_capacity(terms.len());
    for (a, i) in terms {
        match out.iter_mut().find(|t| t.1 == i) {
            Some(t) => t.0 += a,
            None => out.push((a, i)),
        }
    }
    out.retain(|t| t.0 != 0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain3() -> Csp {
        let mut c = Csp::new();
        for i in 0..3 {
            c.add_var(format!("x{}", i + 1), Interval::new(1, 3)).unwrap();
        }
        c.add_constraint(Constraint::Chain { scope: vec![0, 1, 2], dir: Direction::Increasing, strict: true }).unwrap();
        c
    }

    #[test]
    fn strict_chain_pigeonhole() {
        let p = chain3().propagate().unwrap();
        assert_eq!(p.domains(), &[Interval::new(1, 1), Interval::new(2, 2), Interval::new(3, 3)]);
    }

    #[test]
    fn no_constraints_is_unchanged() {
        let mut c = Csp::new();
        c.add_var("x", Interval::new(-4, 9)).unwrap();
        assert_eq!(c.propagate().unwrap(), c);
    }

    #[test]
    fn strict_chain_rejects_tie() {
        assert!(!chain3().is_satisfied(&[1, 1, 2]));
        assert!(chain3().is_satisfied(&[1, 2, 3]));
    }

    #[test]
    fn zero_coefficients_are_dropped() {
        let mut c = Csp::new();
        let x = c.add_var("x", Interval::new(0, 9)).unwrap();
        c.add_constraint(Constraint::LinearEq { terms: vec![(1, x), (-1, x)], constant: 1 }).unwrap();
        assert_eq!(c.constraints()[0], Constraint::LinearEq { terms: vec![], constant: 1 });
        assert!(c.propagate().is_err());
    }

    #[test]
    fn scope_errors() {
        let mut c = Csp::new();
        c.add_var("x", Interval::new(0, 1)).unwrap();
        assert_eq!(c.add_constraint(Constraint::AllDiff(vec![0, 3])), Err(CspError::UnknownVar(3)));
        assert_eq!(c.add_constraint(Constraint::Sort { xs: vec![0], ys: vec![] }), Err(CspError::SortLength));
        assert!(c.add_var("y", Interval::new(2, 1)).is_err());
    }

    #[test]
    fn components_split_groups() {
        let mut c = Csp::new();
        for i in 0..5 {
            c.add_var(format!("v{i}"), Interval::new(0, 9)).unwrap();
        }
        c.add_constraint(Constraint::Chain { scope: vec![0, 2], dir: Direction::Increasing, strict: false }).unwrap();
        c.add_constraint(Constraint::AllDiff(vec![1, 3])).unwrap();
        let comps = c.components();
        assert_eq!(comps, vec![(vec![0, 2], vec![0]), (vec![1, 3], vec![1]), (vec![4], vec![])]);
        let sub = c.restrict(&comps[1].0, &comps[1].1);
        assert_eq!(sub.constraints(), &[Constraint::AllDiff(vec![0, 1])]);
    }
}
