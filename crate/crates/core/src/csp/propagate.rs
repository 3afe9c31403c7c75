use super::{Constraint, Csp, Direction, Interval};

/// Propagation proved that the problem has no solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("constraints are unsatisfiable")]
pub struct Unsat;

/// Hard cap on fixpoint rounds. Every round that does not stop shrinks at
/// least one domain, so this only matters for very wide domains under
/// cyclic linear constraints, where stopping early is still sound.
const MAX_ROUNDS: usize = 100_000;

/// Above this many variables, alldiff only gets the global pigeonhole test.
const HALL_LIMIT: usize = 2048;

impl Csp {
    /// Shrinks `domains` (one per variable) to the fixpoint of the bound
    /// filters. Sound: no solution inside the input box is removed.
    pub fn propagate_domains(&self, domains: &mut [Interval]) -> Result<(), Unsat> {
        if domains.iter().any(Interval::is_empty) {
            return Err(Unsat);
        }
        for _ in 0..MAX_ROUNDS {
            let mut changed = false;
            for c in &self.constraints {
                changed |= filter(c, domains)?;
            }
            if !changed {
                break;
            }
        }
        Ok(())
    }
}

fn set_lo(d: &mut Interval, lo: i128) -> Result<bool, Unsat> {
    if lo > d.lo as i128 {
        if lo > d.hi as i128 {
            return Err(Unsat);
        }
        d.lo = lo as i64;
        return Ok(true);
    }
    Ok(false)
}

fn set_hi(d: &mut Interval, hi: i128) -> Result<bool, Unsat> {
    if hi < d.hi as i128 {
        if hi < d.lo as i128 {
            return Err(Unsat);
        }
        d.hi = hi as i64;
        return Ok(true);
    }
    Ok(false)
}

fn filter(c: &Constraint, d: &mut [Interval]) -> Result<bool, Unsat> {
    match c {
        Constraint::Chain { scope, dir, strict } => {
            let gap = *strict as i128;
            match dir {
                Direction::Increasing => chain(scope.iter().copied(), scope.len(), gap, d),
                Direction::Decreasing => chain(scope.iter().rev().copied(), scope.len(), gap, d),
            }
        }
        Constraint::AllDiff(scope) => alldiff(scope, d),
        Constraint::Sort { xs, ys } => sort(xs, ys, d),
        Constraint::LinearEq { terms, constant } => linear(terms, *constant, true, d),
        Constraint::LinearLe { terms, constant } => linear(terms, *constant, false, d),
    }
}

/// `v_0 <= v_1 <= ...` (with `gap = 1` for strict) in iteration order.
fn chain(
    vars: impl DoubleEndedIterator<Item = usize> + Clone,
    len: usize,
    gap: i128,
    d: &mut [Interval],
) -> Result<bool, Unsat> {
    if len < 2 {
        return Ok(false);
    }
    let mut changed = false;
    let mut prev: Option<usize> = None;
    for v in vars.clone() {
        if let Some(p) = prev {
            let lo = d[p].lo as i128 + gap;
            changed |= set_lo(&mut d[v], lo)?;
        }
        prev = Some(v);
    }
    prev = None;
    for v in vars.rev() {
        if let Some(p) = prev {
            let hi = d[p].hi as i128 - gap;
            changed |= set_hi(&mut d[v], hi)?;
        }
        prev = Some(v);
    }
    Ok(changed)
}

fn alldiff(scope: &[usize], d: &mut [Interval]) -> Result<bool, Unsat> {
    let mut changed = false;
    // trim fixed values off the ends of the other domains until stable
    loop {
        let mut round = false;
        for (i, &v) in scope.iter().enumerate() {
            if d[v].lo != d[v].hi {
                continue;
            }
            let val = d[v].lo;
            for (j, &w) in scope.iter().enumerate() {
                if i == j || !d[w].contains(val) {
                    continue;
                }
                if d[w].lo == d[w].hi {
                    return Err(Unsat);
                }
                if d[w].lo == val {
                    d[w].lo += 1;
                    round = true;
                } else if d[w].hi == val {
                    d[w].hi -= 1;
                    round = true;
                }
            }
        }
        changed |= round;
        if !round {
            break;
        }
    }

    // Hall intervals: more variables confined to [a, b] than values in it
    if scope.len() <= HALL_LIMIT {
        let mut by_hi: Vec<Interval> = scope.iter().map(|&v| d[v]).collect();
        by_hi.sort_unstable_by_key(|i| i.hi);
        let mut los: Vec<i64> = by_hi.iter().map(|i| i.lo).collect();
        los.sort_unstable();
        los.dedup();
        for &a in &los {
            let mut count: i128 = 0;
            for iv in &by_hi {
                if iv.lo >= a {
                    count += 1;
                    if count > iv.hi as i128 - a as i128 + 1 {
                        return Err(Unsat);
                    }
                }
            }
        }
    } else {
        let lo = scope.iter().map(|&v| d[v].lo).min().unwrap_or(0) as i128;
        let hi = scope.iter().map(|&v| d[v].hi).max().unwrap_or(0) as i128;
        if (scope.len() as i128) > hi - lo + 1 {
            return Err(Unsat);
        }
    }
    Ok(changed)
}

fn sort(xs: &[usize], ys: &[usize], d: &mut [Interval]) -> Result<bool, Unsat> {
    let n = xs.len();
    if n == 0 {
        return Ok(false);
    }
    let mut changed = chain(ys.iter().copied(), n, 0, d)?;

    // the i-th smallest output is bounded by the i-th smallest input bounds
    let mut los: Vec<i64> = xs.iter().map(|&x| d[x].lo).collect();
    let mut his: Vec<i64> = xs.iter().map(|&x| d[x].hi).collect();
    los.sort_unstable();
    his.sort_unstable();
    for (i, &y) in ys.iter().enumerate() {
        changed |= set_lo(&mut d[y], los[i] as i128)?;
        changed |= set_hi(&mut d[y], his[i] as i128)?;
    }

    // every input lies between the smallest and largest output
    let (ylo, yhi) = (d[ys[0]].lo as i128, d[ys[n - 1]].hi as i128);
    for &x in xs {
        changed |= set_lo(&mut d[x], ylo)?;
        changed |= set_hi(&mut d[x], yhi)?;
    }
    Ok(changed)
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn ceil_div(a: i128, b: i128) -> i128 {
    -floor_div(-a, b)
}

/// `sum(a_i x_i) = c` (when `eq`) or `<= c`.
fn linear(terms: &[(i64, usize)], c: i64, eq: bool, d: &mut [Interval]) -> Result<bool, Unsat> {
    let term_min = |a: i64, iv: Interval| -> i128 {
        if a > 0 {
            a as i128 * iv.lo as i128
        } else {
            a as i128 * iv.hi as i128
        }
    };
    let term_max = |a: i64, iv: Interval| -> i128 {
        if a > 0 {
            a as i128 * iv.hi as i128
        } else {
            a as i128 * iv.lo as i128
        }
    };
    let c = c as i128;
    let mut changed = false;
    let mut min_sum: i128 = terms.iter().map(|&(a, v)| term_min(a, d[v])).sum();
    let mut max_sum: i128 = terms.iter().map(|&(a, v)| term_max(a, d[v])).sum();
    if min_sum > c || (eq && max_sum < c) {
        return Err(Unsat);
    }
    for &(a, v) in terms {
        let (old_min, old_max) = (term_min(a, d[v]), term_max(a, d[v]));
        let rest_min = min_sum - old_min;
        let rest_max = max_sum - old_max;
        let a128 = a as i128;
        // a*x <= c - rest_min
        let upper = c - rest_min;
        let mut ch =
            if a > 0 { set_hi(&mut d[v], floor_div(upper, a128))? } else { set_lo(&mut d[v], ceil_div(upper, a128))? };
        if eq {
            // a*x >= c - rest_max
            let lower = c - rest_max;
            ch |= if a > 0 {
                set_lo(&mut d[v], ceil_div(lower, a128))?
            } else {
                set_hi(&mut d[v], floor_div(lower, a128))?
            };
        }
        if ch {
            changed = true;
            min_sum = rest_min + term_min(a, d[v]);
            max_sum = rest_max + term_max(a, d[v]);
        }
    }
    Ok(changed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn division_rounding() {
        assert_eq!(floor_div(7, 2), 3);
        assert_eq!(floor_div(-7, 2), -4);
        assert_eq!(floor_div(7, -2), -4);
        assert_eq!(ceil_div(7, 2), 4);
        assert_eq!(ceil_div(-7, 2), -3);
        assert_eq!(ceil_div(-8, 2), -4);
    }

    #[test]
    fn alldiff_pigeonhole() {
        let mut c = Csp::new();
        for _ in 0..3 {
            c.add_var("v", Interval::new(1, 2)).unwrap();
        }
        c.add_constraint(Constraint::AllDiff(vec![0, 1, 2])).unwrap();
        assert_eq!(c.propagate(), Err(Unsat));
    }

    #[test]
    fn alldiff_singleton_trim() {
        let mut c = Csp::new();
        c.add_var("a", Interval::new(1, 1)).unwrap();
        c.add_var("b", Interval::new(1, 2)).unwrap();
        c.add_var("c", Interval::new(1, 3)).unwrap();
        c.add_constraint(Constraint::AllDiff(vec![0, 1, 2])).unwrap();
        let p = c.propagate().unwrap();
        assert_eq!(p.domains(), &[Interval::new(1, 1), Interval::new(2, 2), Interval::new(3, 3)]);
    }

    #[test]
    fn linear_sum_bounds() {
        // y = x + z with x, z in 0..3 and y in 5..20
        let mut c = Csp::new();
        let x = c.add_var("x", Interval::new(0, 3)).unwrap();
        let y = c.add_var("y", Interval::new(5, 20)).unwrap();
        let z = c.add_var("z", Interval::new(0, 3)).unwrap();
        c.add_constraint(Constraint::LinearEq { terms: vec![(1, y), (-1, x), (-1, z)], constant: 0 }).unwrap();
        let p = c.propagate().unwrap();
        assert_eq!(p.domains(), &[Interval::new(2, 3), Interval::new(5, 6), Interval::new(2, 3)]);
    }

    #[test]
    fn sort_bounds() {
        let mut c = Csp::new();
        let a = c.add_var("a", Interval::new(5, 9)).unwrap();
        let b = c.add_var("b", Interval::new(0, 2)).unwrap();
        let y1 = c.add_var("y1", Interval::new(-100, 100)).unwrap();
        let y2 = c.add_var("y2", Interval::new(-100, 100)).unwrap();
        c.add_constraint(Constraint::Sort { xs: vec![a, b], ys: vec![y1, y2] }).unwrap();
        let p = c.propagate().unwrap();
        assert_eq!(p.domains()[y1], Interval::new(0, 2));
        assert_eq!(p.domains()[y2], Interval::new(5, 9));
    }

    /// Enumerates every assignment in the box.
    fn brute_solutions(c: &Csp) -> Vec<Vec<i64>> {
        let d = c.domains();
        let mut out = Vec::new();
        let mut t: Vec<i64> = d.iter().map(|i| i.lo).collect();
        loop {
            if c.is_satisfied(&t) {
                out.push(t.clone());
            }
            let mut i = 0;
            loop {
                if i == t.len() {
                    return out;
                }
                if t[i] < d[i].hi {
                    t[i] += 1;
                    break;
                }
                t[i] = d[i].lo;
                i += 1;
            }
        }
    }

    fn small_csp() -> impl Strategy<Value = Csp> {
        let doms = prop::collection::vec((-3i64..4, 0i64..4), 2..5);
        (doms, prop::collection::vec((0u8..6, any::<u64>()), 1..4)).prop_map(|(doms, cons)| {
            let mut c = Csp::new();
            for (i, (lo, w)) in doms.iter().enumerate() {
                c.add_var(format!("v{i}"), Interval::new(*lo, lo + w)).unwrap();
            }
            let n = doms.len();
            for (kind, seed) in cons {
                let pick = |k: u64| (seed.rotate_left(k as u32 * 7) % n as u64) as usize;
                let all: Vec<usize> = (0..n).collect();
                let con = match kind {
                    0 => Constraint::AllDiff(all),
                    1 => Constraint::Chain { scope: all, dir: Direction::Increasing, strict: seed % 2 == 0 },
                    2 => Constraint::Chain { scope: all, dir: Direction::Decreasing, strict: seed % 2 == 0 },
                    3 => {
                        let h = n / 2;
                        if h == 0 {
                            continue;
                        }
                        Constraint::Sort { xs: (0..h).collect(), ys: (h..2 * h).collect() }
                    }
                    4 => Constraint::LinearEq {
                        terms: vec![(1, pick(1)), (-1, pick(2)), ((seed % 3) as i64 - 1, pick(3))],
                        constant: (seed % 5) as i64 - 2,
                    },
                    _ => Constraint::LinearLe {
                        terms: vec![((seed % 5) as i64 - 2, pick(1)), (2, pick(2))],
                        constant: (seed % 7) as i64 - 3,
                    },
                };
                c.add_constraint(con).unwrap();
            }
            c
        })
    }

    proptest! {
        #[test]
        fn propagation_is_sound(c in small_csp()) {
            let sols = brute_solutions(&c);
            match c.propagate() {
                Ok(p) => {
                    for s in &sols {
                        prop_assert!(s.iter().zip(p.domains()).all(|(v, d)| d.contains(*v)));
                    }
                    for (a, b) in p.domains().iter().zip(c.domains()) {
                        prop_assert!(a.is_subset_of(b));
                    }
                }
                Err(Unsat) => prop_assert!(sols.is_empty()),
            }
        }

        #[test]
        fn propagation_is_idempotent(c in small_csp()) {
            if let Ok(p) = c.propagate() {
                prop_assert_eq!(p.propagate().unwrap(), p);
            }
        }
    }
}
