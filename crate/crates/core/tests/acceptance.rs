//! Acceptance criteria. Prints one PASS/FAIL line per criterion and fails
//! if any criterion fails. Throughput (criterion 6) is measured and
//! printed always, but only asserted when `CTGEN_BENCH=1`.

use std::collections::{BTreeSet, HashSet};
use std::time::{Duration, Instant};

use ctgen_core::bench::run_row;
use ctgen_core::csp::{parse_csp, Constraint, Csp, Direction, Interval};
use ctgen_core::oracle::{build_system, build_system_with, tune, SizeMode};
use ctgen_core::prt::{prt_sample, sample_alldiff, sample_increasing, PrtSampler, SampleError, UniformSolver};
use ctgen_core::shape::{sample_shape, SizeWindow};
use ctgen_core::stats::uniformity;
use ctgen_core::{parse_decls, GenConfig, GenError, GenValue, Generator, RandomStream};
use rand::Rng;

const ALPHA: f64 = 0.01;
const BST: &str = include_str!("../fixtures/bst.spec");
const CORPUS: &str = include_str!("../fixtures/corpus.spec");
const MISC: &str = include_str!("../fixtures/misc.spec");
const TREE_KEYS: &str = include_str!("../fixtures/tree_keys.csp");
const CORPUS_TYPES: [&str; 6] = ["increasing_list", "assoc_list", "bicollect", "binary_tree", "map", "quad_tree_x"];
const SIZES: [u64; 3] = [10, 100, 1000];

type Criterion = (u32, &'static str, fn() -> Outcome);
/// Values of one corpus type at one target size, with their sizes.
type Batch = (String, u64, Vec<(GenValue, u64)>);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

#[test]
fn acceptance_criteria() {
    let bench_mode = std::env::var("CTGEN_BENCH").is_ok_and(|v| v == "1");
    let criteria: Vec<Criterion> = vec![
        (1, "shape uniformity, bst size 3", shape_uniformity),
        (2, "cell sampler uniformity, tree keys", prt_uniformity),
        (3, "box pruning, tree keys", box_pruning),
        (4, "direct sampler exactness", direct_samplers),
        (5, "size targeting", size_targeting),
        (6, "throughput, binary_tree", throughput),
        (7, "oracle closed forms", oracle_equivalence),
        (8, "bst branch probabilities at 10000", branch_limit),
        (9, "round trip, soundness, infeasibility", property_suites),
    ];
    let mut failed = Vec::new();
    for (id, name, run) in criteria {
        let start = Instant::now();
        let r = run();
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("{status} criterion {id} ({name}, {:.1}s): {}", start.elapsed().as_secs_f64(), r.detail);
        if !r.passed && (id != 6 || bench_mode) {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

// ---------------------------------------------------------------- 1

fn shape_uniformity() -> Outcome {
    let leaf = "(Leaf)".to_string();
    let node = |l: &str, r: &str| format!("(Node {l} (@collect 1) {r})");
    let one = node(&leaf, &leaf);
    let support = [
        node(&leaf, &node(&leaf, &one)),
        node(&leaf, &node(&one, &leaf)),
        node(&one, &one),
        node(&node(&leaf, &one), &leaf),
        node(&node(&one, &leaf), &leaf),
    ];
    let ts = parse_decls(BST).unwrap();
    let g = tune(&build_system(&ts, "bst").unwrap(), 3).unwrap();
    let mut rng = RandomStream::from_seed(1);
    let start = Instant::now();
    let samples: Vec<String> = (0..10_000)
        .map(|_| sample_shape(&g, "bst", SizeWindow::new(3, 0), &mut rng, 100_000).unwrap().shape.to_string())
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let r = uniformity(&support, samples, ALPHA);
    let critical_ok = (r.critical - 13.277).abs() < 1e-3;
    outcome(r.passed() && critical_ok && secs < 10.0, format!("{r}; {secs:.2}s for 10000 shapes"))
}

// ---------------------------------------------------------------- 2

const X_DOMAINS: [(i64, i64); 6] = [(-2, 8), (-3, 5), (-3, 10), (-1, 9), (0, 7), (0, 8)];

/// Every solution over the X box, as (x1..x6, y1..y6).
fn brute_force_tree_keys() -> (Vec<Vec<i64>>, u64) {
    let mut sols = Vec::new();
    let mut scanned = 0u64;
    let mut x = [0i64; 6];
    fn rec(i: usize, x: &mut [i64; 6], sols: &mut Vec<Vec<i64>>, scanned: &mut u64) {
        if i == 6 {
            *scanned += 1;
            let mut y = *x;
            y.sort();
            if y[1] == y[0] + y[2] && y[4] == y[5] && y[3] == y[1] + y[5] {
                sols.push(x.iter().chain(&y).copied().collect());
            }
            return;
        }
        for v in X_DOMAINS[i].0..=X_DOMAINS[i].1 {
            x[i] = v;
            rec(i + 1, x, sols, scanned);
        }
    }
    rec(0, &mut x, &mut sols, &mut scanned);
    (sols, scanned)
}

/// An ordering of `ys` that puts each value inside the matching X domain.
fn place_in_domains(ys: &[i64]) -> Option<Vec<i64>> {
    fn rec(i: usize, used: &mut Vec<bool>, ys: &[i64], out: &mut Vec<i64>) -> bool {
        if i == ys.len() {
            return true;
        }
        for j in 0..ys.len() {
            let (lo, hi) = X_DOMAINS[i];
            if !used[j] && (lo..=hi).contains(&ys[j]) {
                used[j] = true;
                out.push(ys[j]);
                if rec(i + 1, used, ys, out) {
                    return true;
                }
                out.pop();
                used[j] = false;
            }
        }
        false
    }
    let mut out = Vec::new();
    rec(0, &mut vec![false; ys.len()], ys, &mut out).then_some(out)
}

fn prt_uniformity() -> Outcome {
    let csp = parse_csp(TREE_KEYS).unwrap();
    let (support, scanned) = brute_force_tree_keys();
    // Reference solutions shown for the tree-keys example, as Y1..Y6.
    let shown = [[-1, -1, 0, 8, 9, 9], [0, 0, 0, 4, 4, 4], [-2, -1, 1, 4, 5, 5]];
    let mut shown_ok = true;
    for ys in shown {
        shown_ok &= match place_in_domains(&ys) {
            Some(xs) => csp.is_satisfied(&[xs, ys.to_vec()].concat()),
            None => false,
        };
    }
    let start = Instant::now();
    let mut sampler = PrtSampler::new(csp, 2);
    let mut rng = RandomStream::from_seed(2);
    let draws: Vec<Vec<i64>> = (0..50_000).map(|_| sampler.sample(1, &mut rng).unwrap().pop().unwrap()).collect();
    let secs = start.elapsed().as_secs_f64();
    let r = uniformity(&support, draws, ALPHA);
    outcome(
        r.passed() && shown_ok && secs < 60.0,
        format!(
            "{} solutions in {scanned} tuples; 50000 draws in {secs:.1}s: {r}; shown solutions satisfiable: {shown_ok}",
            support.len()
        ),
    )
}

// ---------------------------------------------------------------- 3

fn box_pruning() -> Outcome {
    let mut sampler = PrtSampler::new(parse_csp(TREE_KEYS).unwrap(), 2);
    let cells = sampler.grid().cell_count().unwrap();
    let refuted = sampler.refute_all();
    outcome(
        cells == 64 && refuted >= 40,
        format!("{refuted} of {cells} cells refuted (gap to 60: {})", 60 - refuted as i64),
    )
}

// ---------------------------------------------------------------- 4

fn tuples(len: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out.into_iter().flat_map(|t: Vec<i64>| (lo..=hi).map(move |v| [t.clone(), vec![v]].concat())).collect();
    }
    out
}

fn direct_samplers() -> Outcome {
    let mut rng = RandomStream::from_seed(4);
    let strict: Vec<_> = tuples(3, 1, 5).into_iter().filter(|t| t[0] < t[1] && t[1] < t[2]).collect();
    let weak: Vec<_> = tuples(3, 1, 5).into_iter().filter(|t| t[0] <= t[1] && t[1] <= t[2]).collect();
    let perms: Vec<_> = tuples(3, 1, 3).into_iter().filter(|t| t[0] != t[1] && t[1] != t[2] && t[0] != t[2]).collect();
    let sizes_ok = strict.len() == 10 && weak.len() == 35 && perms.len() == 6;
    let a = uniformity(&strict, (0..10_000).map(|_| sample_increasing(3, 1, 5, true, &mut rng).unwrap()), ALPHA);
    let b = uniformity(&weak, (0..10_000).map(|_| sample_increasing(3, 1, 5, false, &mut rng).unwrap()), ALPHA);
    let c = uniformity(&perms, (0..10_000).map(|_| sample_alldiff(3, 1, 3, &mut rng).unwrap()), ALPHA);
    outcome(sizes_ok && a.passed() && b.passed() && c.passed(), format!("strict {a}; non-strict {b}; alldiff {c}"))
}

// ---------------------------------------------------------------- 5

/// 200 values per (corpus type, size), generated with checking on.
fn corpus_values() -> &'static Vec<Batch> {
    static VALUES: std::sync::OnceLock<Vec<Batch>> = std::sync::OnceLock::new();
    VALUES.get_or_init(|| {
        let gen = Generator::new(parse_decls(CORPUS).unwrap()).unwrap();
        let mut rng = RandomStream::from_seed(5);
        let mut out = Vec::new();
        for ty in CORPUS_TYPES {
            for n in SIZES {
                let cfg = GenConfig::with_size(n);
                let vals = (0..200)
                    .map(|_| {
                        let g = gen.generate_detailed(ty, &cfg, &mut rng).unwrap();
                        (g.value, g.size)
                    })
                    .collect();
                out.push((ty.to_string(), n, vals));
            }
        }
        out
    })
}

fn size_targeting() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for (ty, n, vals) in corpus_values() {
        let mean = vals.iter().map(|v| v.1 as f64).sum::<f64>() / vals.len() as f64;
        let dev = (mean - *n as f64).abs() / *n as f64;
        worst = worst.max(dev);
        if *n == 1000 {
            rows.push(format!("{ty} {mean:.1}"));
        }
    }
    outcome(
        worst <= 0.15,
        format!("worst relative deviation {:.2}%; means at 1000: {}", worst * 100.0, rows.join(", ")),
    )
}

// ---------------------------------------------------------------- 6

fn throughput() -> Outcome {
    let gen = Generator::new(parse_decls(CORPUS).unwrap()).unwrap();
    let mut rng = RandomStream::from_seed(6);
    let mut rates = Vec::new();
    for (n, need) in [(100u64, 100.0), (1000, 10.0)] {
        let row = run_row(&gen, "binary_tree", &GenConfig::with_size(n), Duration::from_secs(2), None, &mut rng);
        let rate = row.seconds_per_object.map_or(0.0, |s| 1.0 / s);
        rates.push((n, rate, need));
    }
    let passed = rates.iter().all(|&(_, r, need)| r >= need);
    let detail: Vec<String> = rates.iter().map(|(n, r, need)| format!("{r:.0}/s at {n} (need {need})")).collect();
    outcome(passed, format!("{}; asserted only with CTGEN_BENCH=1", detail.join(", ")))
}

// ---------------------------------------------------------------- 7

fn oracle_equivalence() -> Outcome {
    let list = build_system(&parse_decls("type list = Nil | Cons of (int[@collect]) * list").unwrap(), "list").unwrap();
    let tree = build_system(&parse_decls("type tree = Leaf | Node of tree * (int[@collect]) * tree").unwrap(), "tree")
        .unwrap();
    let mut worst: f64 = 0.0;
    for i in 1..=20 {
        let x = 0.24 * i as f64 / 20.0;
        let l = list.eval_series(x).unwrap()[list.root()];
        let t = tree.eval_series(x).unwrap()[tree.root()];
        worst = worst.max((l - 1.0 / (1.0 - x)).abs());
        worst = worst.max((t - (1.0 - (1.0 - 4.0 * x).sqrt()) / (2.0 * x)).abs());
    }
    let mut worst_x: f64 = 0.0;
    for n in [1u64, 5, 10, 100, 1000, 10_000] {
        let x = tune(&list, n).unwrap().x();
        worst_x = worst_x.max((x - n as f64 / (n as f64 + 1.0)).abs());
    }
    outcome(worst <= 1e-9 && worst_x <= 1e-6, format!("series error {worst:.1e}, tuned x error {worst_x:.1e}"))
}

// ---------------------------------------------------------------- 8

fn branch_limit() -> Outcome {
    let ts = parse_decls(BST).unwrap();
    let sys = build_system_with(&ts, "bst", SizeMode::ConstructorCount).unwrap();
    let g = tune(&sys, 10_000).unwrap();
    let p = g.branch_probs(sys.rule_index("bst").unwrap()).to_vec();
    outcome(p.len() == 2 && p.iter().all(|q| (q - 0.5).abs() <= 0.001), format!("probabilities {p:?}"))
}

// ---------------------------------------------------------------- 9

fn property_suites() -> Outcome {
    let (rt_ok, rt) = round_trip();
    let (sound_ok, sound) = propagation_soundness();
    let (inf_ok, inf) = infeasibility();
    outcome(rt_ok && sound_ok && inf_ok, format!("{rt}; {sound}; {inf}"))
}

fn round_trip() -> (bool, String) {
    let gen = Generator::new(parse_decls(CORPUS).unwrap()).unwrap();
    let mut checked = 0;
    let mut failures = 0;
    for (ty, _, vals) in corpus_values() {
        for (v, _) in vals.iter().take(100) {
            let back = GenValue::from_json(&v.to_json()).ok();
            let text_back = GenValue::parse(&v.to_string()).ok();
            if back.as_ref() != Some(v) || text_back.as_ref() != Some(v) || gen.check(ty, v).is_err() {
                failures += 1;
            }
            checked += 1;
        }
    }
    (checked == 1800 && failures == 0, format!("{checked} values round-tripped, {failures} failures"))
}

/// A random CSP over 2 to 4 variables with small domains.
fn random_csp(rng: &mut RandomStream) -> Csp {
    let mut csp = Csp::new();
    let nvars = rng.random_range(2..=4usize);
    for i in 0..nvars {
        let lo = rng.random_range(-3..=2);
        let hi = lo + rng.random_range(0..=4);
        csp.add_var(format!("v{i}"), Interval::new(lo, hi)).unwrap();
    }
    let pick = |rng: &mut RandomStream, k: usize| -> Vec<usize> {
        let mut all: Vec<usize> = (0..nvars).collect();
        for i in 0..all.len() {
            let j = rng.random_range(i..all.len());
            all.swap(i, j);
        }
        all.truncate(k);
        all
    };
    for _ in 0..rng.random_range(1..=3) {
        let k = rng.random_range(2..=nvars);
        let c = match rng.random_range(0..5) {
            0 => Constraint::AllDiff(pick(rng, k)),
            1 => {
                let dir = if rng.random_bool(0.5) { Direction::Increasing } else { Direction::Decreasing };
                Constraint::Chain { scope: pick(rng, k), dir, strict: rng.random_bool(0.5) }
            }
            2 if nvars >= 4 => {
                let v = pick(rng, 4);
                Constraint::Sort { xs: v[..2].to_vec(), ys: v[2..].to_vec() }
            }
            3 => Constraint::LinearEq {
                terms: pick(rng, k).into_iter().map(|v| (rng.random_range(-2..=2), v)).collect(),
                constant: rng.random_range(-4..=4),
            },
            _ => Constraint::LinearLe {
                terms: pick(rng, k).into_iter().map(|v| (rng.random_range(-2..=2), v)).collect(),
                constant: rng.random_range(-4..=4),
            },
        };
        csp.add_constraint(c).unwrap();
    }
    csp
}

/// Exact semantics written independently of the library.
fn satisfies(c: &Constraint, t: &[i64]) -> bool {
    match c {
        Constraint::AllDiff(s) => s.iter().map(|&i| t[i]).collect::<BTreeSet<_>>().len() == s.len(),
        Constraint::Chain { scope, dir, strict } => scope.windows(2).all(|w| {
            let (a, b) = match dir {
                Direction::Increasing => (t[w[0]], t[w[1]]),
                Direction::Decreasing => (t[w[1]], t[w[0]]),
            };
            if *strict {
                a < b
            } else {
                a <= b
            }
        }),
        Constraint::Sort { xs, ys } => {
            let mut v: Vec<i64> = xs.iter().map(|&i| t[i]).collect();
            v.sort();
            v == ys.iter().map(|&i| t[i]).collect::<Vec<_>>()
        }
        Constraint::LinearEq { terms, constant } => terms.iter().map(|&(a, i)| a * t[i]).sum::<i64>() == *constant,
        Constraint::LinearLe { terms, constant } => terms.iter().map(|&(a, i)| a * t[i]).sum::<i64>() <= *constant,
    }
}

fn brute_force(csp: &Csp) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for d in csp.domains() {
        out =
            out.into_iter().flat_map(|t: Vec<i64>| (d.lo..=d.hi).map(move |v| [t.clone(), vec![v]].concat())).collect();
    }
    out.retain(|t| csp.constraints().iter().all(|c| satisfies(c, t)));
    out
}

fn propagation_soundness() -> (bool, String) {
    let mut rng = RandomStream::from_seed(9);
    let mut bad = 0;
    let mut unsat = 0;
    for _ in 0..1000 {
        let csp = random_csp(&mut rng);
        let sols = brute_force(&csp);
        match csp.propagate() {
            Ok(p) => {
                let lost = sols.iter().any(|s| s.iter().zip(p.domains()).any(|(v, d)| !d.contains(*v)));
                bad += lost as usize;
            }
            Err(_) => {
                unsat += 1;
                bad += !sols.is_empty() as usize;
            }
        }
    }
    (bad == 0, format!("1000 random CSPs, {unsat} refuted, {bad} unsound"))
}

fn infeasibility() -> (bool, String) {
    let start = Instant::now();
    let mut rng = RandomStream::from_seed(10);
    let gen = Generator::new(parse_decls(MISC).unwrap()).unwrap();
    let cfg = GenConfig { domain: Interval::new(0, 4), ..GenConfig::with_size(10) };
    let generated =
        matches!(gen.generate("strict_list", &cfg, &mut rng), Err(GenError::Solve(SampleError::Infeasible(_))));
    let chain =
        parse_csp("x1 in 0..3\nx2 in 0..3\nx3 in 0..3\nx4 in 0..3\nx5 in 0..3\nincreasing_strict(x1..x5)").unwrap();
    let cells =
        matches!(prt_sample(&chain, 2, 1, &mut rng), Err(SampleError::Inconsistent | SampleError::Infeasible(_)));
    let solver = matches!(
        UniformSolver::new(&chain, 2).draw(&mut rng),
        Err(SampleError::Inconsistent | SampleError::Infeasible(_))
    );
    let secs = start.elapsed().as_secs_f64();
    let seen: HashSet<bool> = [generated, cells, solver].into_iter().collect();
    (
        seen == HashSet::from([true]) && secs < 10.0,
        format!("strict chain of 5 over 0..3 rejected by generator {generated}, cell sampler {cells}, solver {solver} in {secs:.2}s"),
    )
}
