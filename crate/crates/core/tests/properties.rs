//! Property tests over random seeds, sizes and small constraint systems.

use std::collections::BTreeMap;

use ctgen_core::csp::{Csp, Interval};
use ctgen_core::prt::{prt_sample, sample_alldiff, sample_increasing, solve_uniform};
use ctgen_core::shape::{default_eps, SizeWindow};
use ctgen_core::{parse_decls, GenConfig, GenValue, Generator, RandomStream};
use proptest::prelude::*;

const CORPUS: &str = include_str!("../fixtures/corpus.spec");
const TYPES: [&str; 7] =
    ["increasing_list", "assoc_list", "bicollect", "binary_tree", "map", "quad_tree_x", "quad_tree_y"];

fn corpus() -> &'static Generator {
    static GEN: std::sync::OnceLock<Generator> = std::sync::OnceLock::new();
    GEN.get_or_init(|| Generator::new(parse_decls(CORPUS).unwrap()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shapes_land_in_the_size_window(ty in 0..TYPES.len(), n in 1u64..150, seed in any::<u64>()) {
        let cfg = GenConfig::with_size(n);
        let s = corpus().sample_shape(TYPES[ty], &cfg, &mut RandomStream::from_seed(seed)).unwrap();
        let w = SizeWindow::new(n, default_eps(n));
        prop_assert!(w.contains(s.shape.size()), "size {} outside {}..{}", s.shape.size(), w.min(), w.max());
    }

    #[test]
    fn solution_queue_is_consumed_in_order(ty in 0..TYPES.len(), n in 1u64..60, seed in any::<u64>()) {
        let gen = corpus();
        let ty = TYPES[ty];
        let cfg = GenConfig::with_size(n);
        let mut rng = RandomStream::from_seed(seed);
        let shape = gen.sample_shape(ty, &cfg, &mut rng).unwrap().shape;
        let built = gen.build_csp(ty, &shape, &cfg).unwrap();
        let solution = solve_uniform(&built.csp, 2, &mut rng).unwrap();
        let mut queue = built.queue(&solution);
        let value = gen.fill(ty, &shape, &mut queue, &cfg, &mut rng).unwrap();
        prop_assert!(queue.is_empty());
        let mut expected: BTreeMap<u32, Vec<i64>> = BTreeMap::new();
        for (g, &v) in built.var_groups.iter().zip(&solution) {
            if let Some(g) = g {
                expected.entry(*g).or_default().push(v);
            }
        }
        let mut got = gen.collect_values(ty, &value).unwrap();
        got.retain(|_, v| !v.is_empty());
        prop_assert_eq!(got, expected);
        prop_assert!(gen.check(ty, &value).is_ok());
    }

    #[test]
    fn generated_values_round_trip(ty in 0..TYPES.len(), n in 1u64..80, seed in any::<u64>()) {
        let ty = TYPES[ty];
        let v = corpus().generate(ty, &GenConfig::with_size(n), &mut RandomStream::from_seed(seed)).unwrap();
        prop_assert_eq!(&GenValue::from_json(&v.to_json()).unwrap(), &v);
        prop_assert_eq!(&GenValue::parse(&v.to_string()).unwrap(), &v);
        prop_assert!(corpus().check(ty, &v).is_ok());
    }

    #[test]
    fn increasing_samples_are_ordered(len in 0usize..12, lo in -20i64..20, width in 0i64..30, strict: bool, seed in any::<u64>()) {
        let hi = lo + width;
        let mut rng = RandomStream::from_seed(seed);
        match sample_increasing(len, lo, hi, strict, &mut rng) {
            Ok(v) => {
                prop_assert_eq!(v.len(), len);
                prop_assert!(v.iter().all(|x| (lo..=hi).contains(x)));
                let ordered = v.windows(2).all(|w| if strict { w[0] < w[1] } else { w[0] <= w[1] });
                prop_assert!(ordered);
            }
            Err(_) => prop_assert!(strict && len as i64 > width + 1),
        }
    }

    #[test]
    fn alldiff_samples_are_distinct(len in 0usize..10, lo in -5i64..5, width in 0i64..12, seed in any::<u64>()) {
        let hi = lo + width;
        match sample_alldiff(len, lo, hi, &mut RandomStream::from_seed(seed)) {
            Ok(mut v) => {
                prop_assert_eq!(v.len(), len);
                prop_assert!(v.iter().all(|x| (lo..=hi).contains(x)));
                v.sort();
                prop_assert!(v.windows(2).all(|w| w[0] < w[1]));
            }
            Err(_) => prop_assert!(len as i64 > width + 1),
        }
    }

    #[test]
    fn cell_sampler_returns_distinct_solutions(a in -3i64..3, b in 0i64..5, c in -6i64..6, seed in any::<u64>()) {
        let mut csp = Csp::new();
        let x = csp.add_var("x", Interval::new(a, a + b)).unwrap();
        let y = csp.add_var("y", Interval::new(-4, 4)).unwrap();
        let z = csp.add_var("z", Interval::new(-4, 4)).unwrap();
        csp.add_constraint(ctgen_core::csp::Constraint::LinearEq { terms: vec![(1, x), (1, y), (-1, z)], constant: c })
            .unwrap();
        let all = csp.enumerate_solutions(1 << 12).unwrap();
        let n = all.len().min(5);
        if n == 0 {
            prop_assert!(prt_sample(&csp, 2, 1, &mut RandomStream::from_seed(seed)).is_err());
        } else {
            let mut sols = prt_sample(&csp, 2, n, &mut RandomStream::from_seed(seed)).unwrap();
            prop_assert!(sols.iter().all(|s| all.contains(s)));
            sols.sort();
            sols.dedup();
            prop_assert_eq!(sols.len(), n);
        }
    }
}
