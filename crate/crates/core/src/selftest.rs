//! Built-in statistical and numerical checks run by `ctgen selftest`.

use std::fmt;
use std::time::Instant;

use crate::binder::{GenConfig, Generator};
use crate::csp::text::parse_csp;
use crate::dsl::{parse_decls, TypeSystem};
use crate::oracle::{build_system, build_system_with, tune, SizeMode};
use crate::prt::{sample_alldiff, sample_increasing, PrtSampler};
use crate::rng::RandomStream;
use crate::shape::{sample_shape, SizeWindow};
use crate::stats::uniformity;

const ALPHA: f64 = 0.01;
const BST: &str = include_str!("../fixtures/bst.spec");
const TREE_KEYS: &str = include_str!("../fixtures/tree_keys.csp");
const LIST: &str = "type list = Nil | Cons of (int[@collect]) * list";
const TREE: &str = "type tree = Leaf | Node of tree * (int[@collect]) * tree";

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub warning: Option<String>,
    pub seconds: f64,
}

impl fmt::Display for SuiteResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {} ({:.2}s): {}", self.name, self.seconds, self.detail)?;
        if let Some(w) = &self.warning {
            write!(f, " [warning: {w}]")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SelftestOptions {
    pub seed: u64,
    /// Biases the shape sampler of the BST suite; the suite must then fail.
    pub skew: Option<f64>,
    /// Draws for the cell-sampler uniformity suite.
    pub prt_draws: usize,
    /// Extra declaration files: every type is generated and checked.
    pub corpus: Vec<(String, TypeSystem)>,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        SelftestOptions { seed: 0x5eed, skew: None, prt_draws: 50_000, corpus: Vec::new() }
    }
}

/// Runs every suite and returns one result per suite.
pub fn run(opts: &SelftestOptions) -> Vec<SuiteResult> {
    let mut out = vec![
        timed("bst-shapes-size-3", || bst_shapes(opts.seed, opts.skew)),
        timed("direct-samplers", || direct_samplers(opts.seed)),
        timed("cell-sampler-tree-keys", || tree_keys(opts.seed, opts.prt_draws)),
        timed("oracle-closed-forms", oracle_closed_forms),
        timed("bst-branch-limit", branch_limit),
    ];
    out.extend(opts.corpus.iter().map(|(label, ts)| corpus_suite(label, ts, opts.seed)));
    out
}

/// Generates and checks values of every type of `ts`. An empty system
/// passes with a warning.
pub fn corpus_suite(label: &str, ts: &TypeSystem, seed: u64) -> SuiteResult {
    let mut r = timed(&format!("round-trip {label}"), || round_trip(ts, seed));
    if ts.is_empty() {
        r.warning = Some("no declarations, nothing to check".into());
    }
    r
}

fn timed(name: &str, f: impl FnOnce() -> Result<String, String>) -> SuiteResult {
    let start = Instant::now();
    let r = f();
    let seconds = start.elapsed().as_secs_f64();
    let (passed, detail) = match r {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    SuiteResult { name: name.to_string(), passed, detail, warning: None, seconds }
}

/// All binary trees with `n` internal nodes in the shape text format.
pub fn binary_tree_shapes(n: usize, ctor: &str, leaf: &str) -> Vec<String> {
    let mut by_size: Vec<Vec<String>> = vec![vec![format!("({leaf})")]];
    for m in 1..=n {
        let mut trees = Vec::new();
        for l in 0..m {
            for a in &by_size[l] {
                for b in &by_size[m - 1 - l] {
                    trees.push(format!("({ctor} {a} (@collect 1) {b})"));
                }
            }
        }
        by_size.push(trees);
    }
    by_size.swap_remove(n)
}

fn bst_shapes(seed: u64, skew: Option<f64>) -> Result<String, String> {
    let ts = parse_decls(BST).map_err(|e| e.to_string())?;
    let sys = build_system(&ts, "bst").map_err(|e| e.to_string())?;
    let mut g = tune(&sys, 3).map_err(|e| e.to_string())?;
    if let Some(f) = skew {
        g = g.with_depth_parity_skew(f);
    }
    let support = binary_tree_shapes(3, "Node", "Leaf");
    let mut rng = RandomStream::from_seed(seed);
    let mut samples = Vec::with_capacity(10_000);
    for _ in 0..10_000 {
        let s = sample_shape(&g, "bst", SizeWindow::new(3, 0), &mut rng, 100_000).map_err(|e| e.to_string())?;
        samples.push(s.shape.to_string());
    }
    verdict(uniformity(&support, samples, ALPHA))
}

fn verdict(r: crate::stats::ChiSquareReport) -> Result<String, String> {
    if r.passed() {
        Ok(r.to_string())
    } else {
        Err(r.to_string())
    }
}

fn all_tuples(len: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out.into_iter().flat_map(|t| (lo..=hi).map(move |v| [t.clone(), vec![v]].concat())).collect();
    }
    out
}

fn direct_samplers(seed: u64) -> Result<String, String> {
    let mut rng = RandomStream::from_seed(seed);
    let tuples = all_tuples(3, 1, 5);
    let strict: Vec<Vec<i64>> = tuples.iter().filter(|t| t[0] < t[1] && t[1] < t[2]).cloned().collect();
    let weak: Vec<Vec<i64>> = tuples.iter().filter(|t| t[0] <= t[1] && t[1] <= t[2]).cloned().collect();
    let perms: Vec<Vec<i64>> =
        all_tuples(3, 1, 3).into_iter().filter(|t| t[0] != t[1] && t[1] != t[2] && t[0] != t[2]).collect();
    let mut details = Vec::new();
    let mut ok = true;
    let draw = |f: &mut dyn FnMut() -> Vec<i64>| (0..10_000).map(|_| f()).collect::<Vec<_>>();
    for (name, support, samples) in [
        ("strict", &strict, draw(&mut || sample_increasing(3, 1, 5, true, &mut rng).expect("feasible"))),
        ("increasing", &weak, draw(&mut || sample_increasing(3, 1, 5, false, &mut rng).expect("feasible"))),
        ("alldiff", &perms, draw(&mut || sample_alldiff(3, 1, 3, &mut rng).expect("feasible"))),
    ] {
        let r = uniformity(support, samples, ALPHA);
        ok &= r.passed();
        details.push(format!("{name} over {}: {r}", support.len()));
    }
    let d = details.join("; ");
    if ok {
        Ok(d)
    } else {
        Err(d)
    }
}

fn tree_keys(seed: u64, draws: usize) -> Result<String, String> {
    let csp = parse_csp(TREE_KEYS).map_err(|e| e.to_string())?;
    let support = csp.enumerate_solutions(1 << 24).ok_or("box too large to enumerate")?;
    let mut rng = RandomStream::from_seed(seed);
    let mut sampler = PrtSampler::new(csp, 2);
    let mut samples = Vec::with_capacity(draws);
    for _ in 0..draws {
        let mut s = sampler.sample(1, &mut rng).map_err(|e| e.to_string())?;
        samples.push(s.pop().ok_or("no solution returned")?);
    }
    let r = uniformity(&support, samples, ALPHA);
    let msg = format!("{} solutions, {draws} draws: {r}", support.len());
    if r.passed() {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn oracle_closed_forms() -> Result<String, String> {
    let list = build_system(&parse_decls(LIST).map_err(|e| e.to_string())?, "list").map_err(|e| e.to_string())?;
    let tree = build_system(&parse_decls(TREE).map_err(|e| e.to_string())?, "tree").map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for i in 1..=20 {
        let x = 0.24 * i as f64 / 20.0;
        let l = list.eval_series(x).map_err(|e| e.to_string())?[list.root()];
        let t = tree.eval_series(x).map_err(|e| e.to_string())?[tree.root()];
        worst = worst.max((l - 1.0 / (1.0 - x)).abs());
        worst = worst.max((t - (1.0 - (1.0 - 4.0 * x).sqrt()) / (2.0 * x)).abs());
    }
    let mut worst_x: f64 = 0.0;
    for n in [1u64, 10, 100, 1000] {
        let g = tune(&list, n).map_err(|e| e.to_string())?;
        worst_x = worst_x.max((g.x() - n as f64 / (n as f64 + 1.0)).abs());
    }
    let msg = format!("max series error {worst:.2e}, max tuned x error {worst_x:.2e}");
    if worst <= 1e-9 && worst_x <= 1e-6 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Branch probabilities of the BST type tuned by constructor count at
/// size 10,000.
pub fn bst_branch_probs() -> Result<Vec<f64>, String> {
    let ts = parse_decls(BST).map_err(|e| e.to_string())?;
    let sys = build_system_with(&ts, "bst", SizeMode::ConstructorCount).map_err(|e| e.to_string())?;
    let g = tune(&sys, 10_000).map_err(|e| e.to_string())?;
    let rule = sys.rule_index("bst").ok_or("bst rule missing")?;
    Ok(g.branch_probs(rule).to_vec())
}

fn branch_limit() -> Result<String, String> {
    let p = bst_branch_probs()?;
    let msg = format!("probabilities {p:?}");
    if p.len() == 2 && p.iter().all(|q| (q - 0.5).abs() <= 0.001) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn round_trip(ts: &TypeSystem, seed: u64) -> Result<String, String> {
    let gen = Generator::new(ts.clone()).map_err(|e| e.to_string())?;
    let mut rng = RandomStream::from_seed(seed);
    let mut count = 0;
    for ty in ts.names() {
        let sizes: &[u64] = if ts.is_recursive(ty) { &[5, 20] } else { &[1] };
        for &n in sizes {
            let cfg = GenConfig { verify: false, ..GenConfig::with_size(n) };
            for _ in 0..20 {
                let v = gen.generate(ty, &cfg, &mut rng).map_err(|e| format!("{ty} at {n}: {e}"))?;
                gen.check(ty, &v).map_err(|e| format!("{ty} at {n}: {e}"))?;
                count += 1;
            }
        }
    }
    Ok(format!("{count} values generated and checked"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_bsts_of_size_three() {
        let shapes = binary_tree_shapes(3, "Node", "Leaf");
        assert_eq!(shapes.len(), 5);
        assert_eq!(binary_tree_shapes(4, "N", "L").len(), 14);
        assert!(shapes.contains(
            &"(Node (Leaf) (@collect 1) (Node (Leaf) (@collect 1) (Node (Leaf) (@collect 1) (Leaf))))".to_string()
        ));
    }

    #[test]
    fn skewed_sampler_is_detected() {
        assert!(bst_shapes(7, None).is_ok());
        assert!(bst_shapes(7, Some(4.0)).is_err());
    }

    #[test]
    fn empty_corpus_passes_with_warning() {
        let r = corpus_suite("empty", &parse_decls("").unwrap(), 1);
        assert!(r.passed);
        assert!(r.warning.is_some());
    }
}
