//! Goodness-of-fit helpers for the uniformity checks.

use std::collections::HashMap;
use std::hash::Hash;

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Pearson statistic of `observed` counts against `expected` counts.
pub fn chi_square(observed: &[u64], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len(), "one expectation per category");
    observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| {
            let d = o as f64 - e;
            d * d / e
        })
        .sum()
}

/// Upper `alpha` quantile of the chi-square distribution with `df` degrees
/// of freedom.
pub fn critical_value(df: u64, alpha: f64) -> f64 {
    let dist = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    dist.inverse_cdf(1.0 - alpha)
}

/// Outcome of a uniformity test.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub df: u64,
    pub critical: f64,
    /// Categories never observed.
    pub missing: usize,
}

impl ChiSquareReport {
    pub fn passed(&self) -> bool {
        self.statistic < self.critical
    }
}

impl std::fmt::Display for ChiSquareReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "chi2 = {:.3} (df {}, critical {:.3}), {} categories unseen",
            self.statistic, self.df, self.critical, self.missing
        )
    }
}

/// Tests `samples` against the uniform distribution over `support` at
/// level `alpha`. Samples outside the support make the test fail.
pub fn uniformity<T: Eq + Hash>(support: &[T], samples: impl IntoIterator<Item = T>, alpha: f64) -> ChiSquareReport {
    assert!(support.len() >= 2, "uniformity needs at least two categories");
    let index: HashMap<&T, usize> = support.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut counts = vec![0u64; support.len()];
    let mut total = 0u64;
    let mut outside = 0u64;
    for s in samples {
        total += 1;
        match index.get(&s) {
            Some(&i) => counts[i] += 1,
            None => outside += 1,
        }
    }
    let df = support.len() as u64 - 1;
    let critical = critical_value(df, alpha);
    let missing = counts.iter().filter(|&&c| c == 0).count();
    let statistic = if outside > 0 || total == 0 {
        f64::INFINITY
    } else {
        let e = total as f64 / support.len() as f64;
        chi_square(&counts, &vec![e; support.len()])
    };
    ChiSquareReport { statistic, df, critical, missing }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_quantiles() {
        assert!((critical_value(4, 0.01) - 13.277).abs() < 1e-3);
        assert!((critical_value(1, 0.05) - 3.841).abs() < 1e-3);
        assert!((critical_value(9, 0.01) - 21.666).abs() < 1e-3);
    }

    #[test]
    fn statistic_by_hand() {
        assert_eq!(chi_square(&[10, 20], &[15.0, 15.0]), 25.0 / 15.0 * 2.0);
    }

    #[test]
    fn uniformity_flags_bias_and_strangers() {
        let support = [0u8, 1, 2];
        assert!(uniformity(&support, [0, 1, 2].repeat(100), 0.01).passed());
        let biased: Vec<u8> = (0..300).map(|i| if i % 3 == 0 { 1 } else { 0 }).collect();
        assert!(!uniformity(&support, biased, 0.01).passed());
        assert!(!uniformity(&support, vec![0, 1, 2, 7], 0.01).passed());
    }
}
