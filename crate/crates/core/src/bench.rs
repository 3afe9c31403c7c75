//! Time-budgeted generation runs reporting one row per (type, size).

use std::fmt;
use std::time::{Duration, Instant};

use crate::binder::{GenConfig, Generator};
use crate::rng::RandomStream;

/// One line of the benchmark table.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub type_name: String,
    pub target: u64,
    /// Mean size of the generated values; `None` when nothing was generated.
    pub average_size: Option<f64>,
    pub objects: u64,
    /// Wall-clock seconds per generated value; `None` when nothing was generated.
    pub seconds_per_object: Option<f64>,
    /// Why generation stopped before the budget, if it did.
    pub failure: Option<String>,
}

impl BenchRow {
    pub fn header() -> String {
        format!("{:<20} {:>9} {:>12} {:>10} {:>14}", "type", "targeted", "average", "objects", "s/object")
    }
}

impl fmt::Display for BenchRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let avg = self.average_size.map_or("-".to_string(), |a| format!("{a:.2}"));
        let spo = self.seconds_per_object.map_or("-".to_string(), |s| format!("{s:.6}"));
        write!(f, "{:<20} {:>9} {:>12} {:>10} {:>14}", self.type_name, self.target, avg, self.objects, spo)?;
        if let Some(e) = &self.failure {
            write!(f, "  ({e})")?;
        }
        Ok(())
    }
}

/// Generates values of `ty` at `cfg.size` until `budget` has elapsed or
/// `max_objects` values exist. Tuning happens before the clock starts.
pub fn run_row(
    gen: &Generator,
    ty: &str,
    cfg: &GenConfig,
    budget: Duration,
    max_objects: Option<u64>,
    rng: &mut RandomStream,
) -> BenchRow {
    let mut row = BenchRow {
        type_name: ty.to_string(),
        target: cfg.size,
        average_size: None,
        objects: 0,
        seconds_per_object: None,
        failure: None,
    };
    if let Err(e) = gen.grammar(ty, cfg.size, cfg.size_mode) {
        row.failure = Some(e.to_string());
        return row;
    }
    let mut total_size = 0u64;
    let start = Instant::now();
    while start.elapsed() < budget && max_objects.is_none_or(|m| row.objects < m) {
        match gen.generate_detailed(ty, cfg, rng) {
            Ok(g) => {
                total_size += g.size;
                row.objects += 1;
            }
            Err(e) => {
                row.failure = Some(e.to_string());
                break;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if row.objects > 0 {
        row.average_size = Some(total_size as f64 / row.objects as f64);
        row.seconds_per_object = Some(secs / row.objects as f64);
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_decls;

    #[test]
    fn zero_budget_gives_empty_row() {
        let gen = Generator::new(parse_decls(include_str!("../fixtures/bst.spec")).unwrap()).unwrap();
        let row =
            run_row(&gen, "bst", &GenConfig::with_size(10), Duration::ZERO, None, &mut RandomStream::from_seed(1));
        assert_eq!(row.objects, 0);
        assert_eq!(row.average_size, None);
        assert!(row.failure.is_none());
    }

    #[test]
    fn average_lies_in_window() {
        let gen = Generator::new(parse_decls(include_str!("../fixtures/bst.spec")).unwrap()).unwrap();
        let cfg = GenConfig::with_size(20);
        let row = run_row(&gen, "bst", &cfg, Duration::from_secs(30), Some(50), &mut RandomStream::from_seed(1));
        assert_eq!(row.objects, 50);
        let avg = row.average_size.unwrap();
        assert!((18.0..=22.0).contains(&avg), "{avg}");
        assert!(row.to_string().starts_with("bst"));
    }

    #[test]
    fn failures_are_reported() {
        let gen = Generator::new(parse_decls(include_str!("../fixtures/misc.spec")).unwrap()).unwrap();
        let cfg = GenConfig { domain: crate::csp::Interval::new(0, 3), ..GenConfig::with_size(10) };
        let row = run_row(&gen, "strict_list", &cfg, Duration::from_secs(5), None, &mut RandomStream::from_seed(1));
        assert_eq!(row.objects, 0);
        assert!(row.failure.unwrap().contains("Infeasible"));
    }
}
