//! Line-based textual CSP format.
//!
//! ```text
//! # comment
//! x1 in -2..8
//! sort(x1..x6 -> y1..y6)
//! alldiff(a, b, c)
//! increasing_strict(x1..x4)
//! y2 = y1 + y3
//! 2*a - b <= 7
//! ```
//!
//! Every variable must get a domain from an `in` line, except outputs of
//! `sort`, which default to the hull of the input domains.

use std::collections::HashMap;
use std::fmt;

use super::{Constraint, Csp, Direction, Interval};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct CspParseError {
    pub line: usize,
    pub message: String,
}

enum Pending {
    Sort(Vec<String>, Vec<String>),
    Global(String, Vec<String>),
    Linear(Vec<(i64, String)>, i64, bool),
}

pub fn parse_csp(src: &str) -> Result<Csp, CspParseError> {
    let mut domains: Vec<(String, Interval)> = Vec::new();
    let mut pending: Vec<(usize, Pending)> = Vec::new();

    for (idx, raw) in src.lines().enumerate() {
        let line_no = idx + 1;
        let err = |m: String| CspParseError { line: line_no, message: m };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some((name, dom)) = line.split_once(" in ") {
            let name = name.trim();
            check_ident(name).map_err(err)?;
            let (lo, hi) =
                dom.trim().split_once("..").ok_or_else(|| err(format!("expected `lo..hi`, found `{}`", dom.trim())))?;
            let lo: i64 = lo.trim().parse().map_err(|_| err(format!("bad bound `{}`", lo.trim())))?;
            let hi: i64 = hi.trim().parse().map_err(|_| err(format!("bad bound `{}`", hi.trim())))?;
            if lo > hi {
                return Err(err(format!("empty domain {lo}..{hi}")));
            }
            if domains.iter().any(|(n, _)| n == name) {
                return Err(err(format!("variable `{name}` declared twice")));
            }
            domains.push((name.to_string(), Interval::new(lo, hi)));
        } else if let Some((head, rest)) = line.split_once('(') {
            let head = head.trim();
            let body = rest.trim_end().strip_suffix(')').ok_or_else(|| err("missing closing `)`".into()))?;
            if head == "sort" {
                let (xs, ys) = body.split_once("->").ok_or_else(|| err("sort needs `xs -> ys`".into()))?;
                let xs = var_list(xs).map_err(err)?;
                let ys = var_list(ys).map_err(err)?;
                if xs.len() != ys.len() {
                    return Err(err("sort lists differ in length".into()));
                }
                pending.push((line_no, Pending::Sort(xs, ys)));
            } else if matches!(
                head,
                "alldiff" | "increasing" | "increasing_strict" | "decreasing" | "decreasing_strict"
            ) {
                pending.push((line_no, Pending::Global(head.to_string(), var_list(body).map_err(err)?)));
            } else {
                return Err(err(format!("unknown constraint `{head}`")));
            }
        } else {
            let (lhs, op, rhs) = split_relation(line).ok_or_else(|| err("expected a relation".into()))?;
            let mut terms = linear_expr(lhs).map_err(err)?;
            let right = linear_expr(rhs).map_err(err)?;
            terms.extend(right.into_iter().map(|(a, v)| (-a, v)));
            // constant terms carry an empty name; move them to the right side
            let constant: i64 = -terms.iter().filter(|t| t.1.is_empty()).map(|t| t.0).sum::<i64>();
            terms.retain(|t| !t.1.is_empty());
            let p = match op {
                "=" => Pending::Linear(terms, constant, true),
                "<=" => Pending::Linear(terms, constant, false),
                "<" => Pending::Linear(terms, constant - 1, false),
                ">=" => Pending::Linear(negate(terms), -constant, false),
                ">" => Pending::Linear(negate(terms), -constant - 1, false),
                _ => unreachable!(),
            };
            pending.push((line_no, p));
        }
    }

    // sort outputs without a declared domain take the hull of the inputs
    for (line, p) in &pending {
        if let Pending::Sort(xs, ys) = p {
            let mut hull: Option<Interval> = None;
            for x in xs {
                let d = lookup(&domains, x)
                    .ok_or_else(|| CspParseError { line: *line, message: format!("variable `{x}` has no domain") })?;
                hull = Some(hull.map_or(d, |h| Interval::new(h.lo.min(d.lo), h.hi.max(d.hi))));
            }
            if let Some(h) = hull {
                for y in ys {
                    if lookup(&domains, y).is_none() {
                        domains.push((y.clone(), h));
                    }
                }
            }
        }
    }

    let mut csp = Csp::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (name, d) in &domains {
        let id = csp.add_var(name.clone(), *d).expect("domain checked non-empty");
        index.insert(name.clone(), id);
    }
    for (line, p) in pending {
        let resolve = |names: &[String]| -> Result<Vec<usize>, CspParseError> {
            names
                .iter()
                .map(|n| {
                    index
                        .get(n)
                        .copied()
                        .ok_or_else(|| CspParseError { line, message: format!("variable `{n}` has no domain") })
                })
                .collect()
        };
        let con = match p {
            Pending::Sort(xs, ys) => Constraint::Sort { xs: resolve(&xs)?, ys: resolve(&ys)? },
            Pending::Global(head, vars) => {
                let scope = resolve(&vars)?;
                match head.as_str() {
                    "alldiff" => Constraint::AllDiff(scope),
                    "increasing" => Constraint::Chain { scope, dir: Direction::Increasing, strict: false },
                    "increasing_strict" => Constraint::Chain { scope, dir: Direction::Increasing, strict: true },
                    "decreasing" => Constraint::Chain { scope, dir: Direction::Decreasing, strict: false },
                    _ => Constraint::Chain { scope, dir: Direction::Decreasing, strict: true },
                }
            }
            Pending::Linear(terms, constant, eq) => {
                let names: Vec<String> = terms.iter().map(|t| t.1.clone()).collect();
                let ids = resolve(&names)?;
                let terms = terms.iter().zip(ids).map(|(t, i)| (t.0, i)).collect();
                if eq {
                    Constraint::LinearEq { terms, constant }
                } else {
                    Constraint::LinearLe { terms, constant }
                }
            }
        };
        csp.add_constraint(con).map_err(|e| CspParseError { line, message: e.to_string() })?;
    }
    Ok(csp)
}

fn lookup(domains: &[(String, Interval)], name: &str) -> Option<Interval> {
    domains.iter().find(|(n, _)| n == name).map(|(_, d)| *d)
}

fn negate(terms: Vec<(i64, String)>) -> Vec<(i64, String)> {
    terms.into_iter().map(|(a, v)| (-a, v)).collect()
}

fn check_ident(s: &str) -> Result<(), String> {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return Err(format!("bad variable name `{s}`")),
    }
    if chars.all(|c| c.is_ascii_alphanumeric() || c == '_') {
        Ok(())
    } else {
        Err(format!("bad variable name `{s}`"))
    }
}

/// `a, b, c` or `x1..x6` (or a mix of both).
fn var_list(s: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for item in s.split(',') {
        let item = item.trim();
        if let Some((a, b)) = item.split_once("..") {
            let (pa, na) = split_index(a.trim()).ok_or_else(|| format!("bad range start `{a}`"))?;
            let (pb, nb) = split_index(b.trim()).ok_or_else(|| format!("bad range end `{b}`"))?;
            if pa != pb || na > nb {
                return Err(format!("bad range `{item}`"));
            }
            out.extend((na..=nb).map(|i| format!("{pa}{i}")));
        } else {
            check_ident(item)?;
            out.push(item.to_string());
        }
    }
    Ok(out)
}

fn split_index(s: &str) -> Option<(&str, u64)> {
    let cut = s.find(|c: char| c.is_ascii_digit())?;
    let (prefix, digits) = s.split_at(cut);
    check_ident(prefix).ok()?;
    Some((prefix, digits.parse().ok()?))
}

fn split_relation(line: &str) -> Option<(&str, &'static str, &str)> {
    for op in ["<=", ">=", "<", ">", "="] {
        if let Some(pos) = line.find(op) {
            return Some((&line[..pos], op, &line[pos + op.len()..]));
        }
    }
    None
}

/// Sum of `[int *] name` and `int` terms; constants get an empty name.
fn linear_expr(s: &str) -> Result<Vec<(i64, String)>, String> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err("empty side of relation".into());
    }
    let mut out = Vec::new();
    let mut rest = s.as_str();
    let mut first = true;
    while !rest.is_empty() {
        let sign = if let Some(r) = rest.strip_prefix('+') {
            rest = r;
            1
        } else if let Some(r) = rest.strip_prefix('-') {
            rest = r;
            -1
        } else if first {
            1
        } else {
            return Err(format!("expected `+` or `-` before `{rest}`"));
        };
        first = false;
        let end = rest.find(['+', '-']).unwrap_or(rest.len());
        let term = &rest[..end];
        rest = &rest[end..];
        let (coef, name) = match term.split_once('*') {
            Some((c, v)) => (c.parse::<i64>().map_err(|_| format!("bad coefficient `{c}`"))?, v),
            None if term.starts_with(|c: char| c.is_ascii_digit()) => {
                let v = term.parse::<i64>().map_err(|_| format!("bad term `{term}`"))?;
                out.push((sign * v, String::new()));
                continue;
            }
            None => (1, term),
        };
        check_ident(name)?;
        out.push((sign * coef, name.to_string()));
    }
    Ok(out)
}

impl fmt::Display for Csp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |i: &usize| self.names[*i].as_str();
        let list = |s: &[usize]| s.iter().map(name).collect::<Vec<_>>().join(", ");
        for (n, d) in self.names.iter().zip(&self.domains) {
            writeln!(f, "{n} in {d}")?;
        }
        for c in &self.constraints {
            match c {
                Constraint::AllDiff(s) => writeln!(f, "alldiff({})", list(s))?,
                Constraint::Chain { scope, dir, strict } => {
                    let head = match dir {
                        Direction::Increasing => "increasing",
                        Direction::Decreasing => "decreasing",
                    };
                    let suffix = if *strict { "_strict" } else { "" };
                    writeln!(f, "{head}{suffix}({})", list(scope))?
                }
                Constraint::Sort { xs, ys } => writeln!(f, "sort({} -> {})", list(xs), list(ys))?,
                Constraint::LinearEq { terms, constant } | Constraint::LinearLe { terms, constant } => {
                    if terms.is_empty() {
                        f.write_str("0")?;
                    }
                    for (k, (a, v)) in terms.iter().enumerate() {
                        let sign = if *a < 0 {
                            "-"
                        } else if k > 0 {
                            "+"
                        } else {
                            ""
                        };
                        let sep = if k > 0 { " " } else { "" };
                        let space = if k > 0 { " " } else { "" };
                        write!(f, "{sep}{sign}{space}{}*{}", a.unsigned_abs(), name(v))?;
                    }
                    let op = if matches!(c, Constraint::LinearEq { .. }) { "=" } else { "<=" };
                    writeln!(f, " {op} {constant}")?
                }
            }
        }
        Ok(())
    }
}
