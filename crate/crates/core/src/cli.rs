//! The `ctgen` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use crate::bench::{run_row, BenchRow};
use crate::binder::{GenConfig, GenError, Generator};
use crate::csp::text::parse_csp;
use crate::csp::Interval;
use crate::dsl::{parse_decls, validate, TypeSystem};
use crate::oracle::SizeMode;
use crate::prt::{GridAxes, PrtSampler, SampleError};
use crate::rng::RandomStream;
use crate::selftest::{self, SelftestOptions};
use crate::value::GenValue;

#[derive(Debug, Parser)]
#[command(name = "ctgen", version, about = "Uniform generators for constrained algebraic data types")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Jsonl,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckFormat {
    Auto,
    Jsonl,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Collect,
    Constructor,
}

impl From<ModeArg> for SizeMode {
    fn from(m: ModeArg) -> SizeMode {
        match m {
            ModeArg::Collect => SizeMode::CollectCount,
            ModeArg::Constructor => SizeMode::ConstructorCount,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridArg {
    /// Sort outputs and the decision variables feeding no sort.
    Outputs,
    /// Decision variables only.
    Decision,
}

impl From<GridArg> for GridAxes {
    fn from(g: GridArg) -> GridAxes {
        match g {
            GridArg::Outputs => GridAxes::SortOutputs,
            GridArg::Decision => GridAxes::Decision,
        }
    }
}

/// Options shared by the generating commands.
#[derive(Debug, clap::Args)]
pub struct GenArgs {
    /// Domain of collected values, `lo..hi` inclusive.
    #[arg(long, env = "CTGEN_DOMAIN", value_parser = parse_interval, allow_hyphen_values = true)]
    pub domain: Option<Interval>,
    /// Domain of one collect group, `group=lo..hi`. Repeatable.
    #[arg(long = "group-domain", value_parser = parse_group_domain, allow_hyphen_values = true)]
    pub group_domains: Vec<(u32, Interval)>,
    /// Half-width of the accepted size window (default: ceil(size/10)).
    #[arg(long)]
    pub eps: Option<u64>,
    /// Size measure used for tuning (default: automatic).
    #[arg(long = "size-mode", value_enum)]
    pub size_mode: Option<ModeArg>,
    /// Cells per dimension of the solver grid.
    #[arg(long, default_value_t = crate::prt::DEFAULT_K, value_parser = clap::value_parser!(u32).range(2..))]
    pub k: u32,
}

impl GenArgs {
    fn config(&self, size: u64) -> GenConfig {
        let mut cfg = GenConfig::with_size(size);
        if let Some(d) = self.domain {
            cfg.domain = d;
        }
        cfg.group_domains = self.group_domains.iter().copied().collect::<BTreeMap<_, _>>();
        cfg.eps = self.eps;
        cfg.size_mode = self.size_mode.map(Into::into);
        cfg.k = self.k;
        cfg
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a declaration file.
    Validate { spec: PathBuf },
    /// Print the tuned grammar of a type.
    Tune {
        spec: PathBuf,
        #[arg(long = "type")]
        ty: String,
        #[arg(long, default_value_t = 10)]
        size: u64,
        #[arg(long = "size-mode", value_enum)]
        size_mode: Option<ModeArg>,
    },
    /// Generate values of a type.
    Sample {
        spec: PathBuf,
        #[arg(long = "type")]
        ty: String,
        #[arg(long, default_value_t = 10)]
        size: u64,
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Jsonl)]
        format: Format,
        /// Skip re-checking every value before it is printed.
        #[arg(long = "no-verify")]
        no_verify: bool,
        #[command(flatten)]
        gen: GenArgs,
    },
    /// Check values, one per line, against a type.
    Check {
        spec: PathBuf,
        /// Type of the values; JSONL records may carry their own.
        #[arg(long = "type")]
        ty: Option<String>,
        /// Value file, `-` for standard input.
        #[arg(default_value = "-")]
        values: PathBuf,
        #[arg(long, value_enum, default_value_t = CheckFormat::Auto)]
        format: CheckFormat,
    },
    /// Draw distinct uniform solutions of a textual CSP.
    Solve {
        csp: PathBuf,
        #[arg(long, default_value_t = crate::prt::DEFAULT_K, value_parser = clap::value_parser!(u32).range(2..))]
        k: u32,
        #[arg(long = "n-solutions", default_value_t = 1)]
        n_solutions: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "max-draws", default_value_t = crate::prt::DEFAULT_MAX_DRAWS)]
        max_draws: u64,
        /// Variables spanned by the cell grid.
        #[arg(long, value_enum, default_value_t = GridArg::Outputs)]
        grid: GridArg,
        /// Report the propagated box and refuted cells on standard error.
        #[arg(long)]
        stats: bool,
    },
    /// Generate for a fixed time per (type, size) and report rates.
    Bench {
        spec: PathBuf,
        /// Types to run (default: every recursive type). Repeatable.
        #[arg(long = "type")]
        types: Vec<String>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![10u64, 100, 1000])]
        sizes: Vec<u64>,
        /// Seconds per row.
        #[arg(long, default_value_t = 60.0)]
        budget: f64,
        #[arg(long = "max-objects")]
        max_objects: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        gen: GenArgs,
    },
    /// Run the built-in uniformity and oracle checks.
    Selftest {
        /// Declaration files whose types are generated and checked too.
        #[arg(long = "spec")]
        specs: Vec<PathBuf>,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long = "prt-draws", default_value_t = 50_000)]
        prt_draws: usize,
        /// Bias the shape sampler; the shape suite is then expected to fail.
        #[arg(long, hide = true)]
        skew: Option<f64>,
    },
}

/// Failure of a command. Domain errors exit with 1, broken internal
/// invariants with 2.
#[derive(Debug)]
pub enum CliError {
    Domain(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Internal(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Domain(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> Self {
        match e {
            GenError::QueueMismatch(_) | GenError::Check(_) => CliError::Internal(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Domain(format!("io: {e}"))
    }
}

pub fn parse_interval(s: &str) -> Result<Interval, String> {
    let (lo, hi) = s.split_once("..").ok_or_else(|| format!("expected lo..hi, found `{s}`"))?;
    let lo: i64 = lo.trim().parse().map_err(|e| format!("bad lower bound `{lo}`: {e}"))?;
    let hi: i64 = hi.trim().parse().map_err(|e| format!("bad upper bound `{hi}`: {e}"))?;
    if lo > hi {
        return Err(format!("empty domain {lo}..{hi}"));
    }
    Ok(Interval::new(lo, hi))
}

fn parse_group_domain(s: &str) -> Result<(u32, Interval), String> {
    let (g, d) = s.split_once('=').ok_or_else(|| format!("expected group=lo..hi, found `{s}`"))?;
    let g: u32 = g.trim().parse().map_err(|e| format!("bad group `{g}`: {e}"))?;
    Ok((g, parse_interval(d)?))
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Domain(format!("io: {}: {e}", path.display())))
}

fn load_spec(path: &Path) -> Result<TypeSystem, CliError> {
    parse_decls(&read(path)?).map_err(|e| CliError::Domain(format!("parse: {}: {e}", path.display())))
}

fn load_generator(path: &Path) -> Result<Generator, CliError> {
    Ok(Generator::new(load_spec(path)?)?)
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run(args: impl IntoIterator<Item = OsString>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = execute(cli.command, out, err).and_then(|code| {
        out.flush()?;
        Ok(code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = out.flush();
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}

fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::Validate { spec } => cmd_validate(&spec, out),
        Command::Tune { spec, ty, size, size_mode } => {
            let gen = load_generator(&spec)?;
            let g = gen.grammar(&ty, size, size_mode.map(Into::into))?;
            write!(out, "{g}")?;
            Ok(0)
        }
        Command::Sample { spec, ty, size, count, seed, format, no_verify, gen } => {
            let generator = load_generator(&spec)?;
            let mut cfg = gen.config(size);
            cfg.verify = !no_verify;
            let mut rng = RandomStream::from_seed(seed);
            for _ in 0..count {
                let g = generator.generate_detailed(&ty, &cfg, &mut rng)?;
                match format {
                    Format::Jsonl => writeln!(out, "{}", record(&ty, g.size, &g.value))?,
                    Format::Text => writeln!(out, "{}", g.value)?,
                }
            }
            Ok(0)
        }
        Command::Check { spec, ty, values, format } => cmd_check(&spec, ty.as_deref(), &values, format, out, err),
        Command::Solve { csp, k, n_solutions, seed, max_draws, grid, stats } => {
            cmd_solve(&csp, k, n_solutions, seed, max_draws, grid.into(), stats, out, err)
        }
        Command::Bench { spec, types, sizes, budget, max_objects, seed, gen } => {
            let generator = load_generator(&spec)?;
            let ts = generator.type_system();
            let types = if types.is_empty() {
                ts.names().filter(|t| ts.is_recursive(t)).map(str::to_string).collect()
            } else {
                types
            };
            if !budget.is_finite() || budget < 0.0 {
                return Err(CliError::Domain(format!("bad budget {budget}")));
            }
            let mut master = RandomStream::from_seed(seed);
            writeln!(out, "{}", BenchRow::header())?;
            for ty in &types {
                for &n in &sizes {
                    let mut rng = master.fork();
                    let row =
                        run_row(&generator, ty, &gen.config(n), Duration::from_secs_f64(budget), max_objects, &mut rng);
                    writeln!(out, "{row}")?;
                    out.flush()?;
                }
            }
            Ok(0)
        }
        Command::Selftest { specs, seed, prt_draws, skew } => {
            let mut corpus = Vec::new();
            for s in &specs {
                corpus.push((s.display().to_string(), load_spec(s)?));
            }
            let opts = SelftestOptions { seed, skew, prt_draws, corpus };
            let results = selftest::run(&opts);
            let mut failed = 0;
            for r in &results {
                writeln!(out, "{r}")?;
                failed += usize::from(!r.passed);
            }
            writeln!(out, "{} suites, {failed} failed", results.len())?;
            Ok(if failed == 0 { 0 } else { 1 })
        }
    }
}

fn cmd_validate(spec: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let ts = load_spec(spec)?;
    let diags = validate(&ts);
    if !diags.is_empty() {
        let msg: Vec<String> = diags.iter().map(ToString::to_string).collect();
        return Err(CliError::Domain(format!("validate: {}", msg.join("\n  "))));
    }
    writeln!(out, "ok: {} declarations", ts.len())?;
    for name in ts.names() {
        let groups: Vec<String> = ts.reachable_groups(name).iter().map(u32::to_string).collect();
        writeln!(
            out,
            "  {name}: recursive={} constrained={} groups=[{}]",
            ts.is_recursive(name),
            ts.is_constrained(name),
            groups.join(",")
        )?;
    }
    Ok(0)
}

/// One JSONL output line.
pub fn record(ty: &str, size: u64, value: &GenValue) -> String {
    let ty = serde_json::to_string(ty).expect("strings serialize");
    format!("{{\"type\":{ty},\"size\":{size},\"value\":{}}}", value.to_json())
}

#[derive(serde::Deserialize)]
struct Record<'a> {
    #[serde(rename = "type")]
    ty: Option<String>,
    #[serde(borrow)]
    value: &'a serde_json::value::RawValue,
}

/// Reads one JSONL line: either a record carrying a `value` field or a
/// bare value.
fn parse_json_line(line: &str) -> Result<(Option<String>, GenValue), String> {
    if line.trim_start().starts_with('{') && line.contains("\"value\"") {
        let mut de = serde_json::Deserializer::from_str(line);
        de.disable_recursion_limit();
        let de = serde_stacker::Deserializer::new(&mut de);
        if let Ok(r) = <Record as serde::Deserialize>::deserialize(de) {
            let v = GenValue::from_json(r.value.get()).map_err(|e| e.to_string())?;
            return Ok((r.ty, v));
        }
    }
    GenValue::from_json(line).map(|v| (None, v)).map_err(|e| e.to_string())
}

fn cmd_check(
    spec: &Path,
    ty: Option<&str>,
    values: &Path,
    format: CheckFormat,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let gen = load_generator(spec)?;
    let reader: Box<dyn BufRead> = if values == Path::new("-") {
        Box::new(io::BufReader::new(io::stdin()))
    } else {
        let f = std::fs::File::open(values).map_err(|e| CliError::Domain(format!("io: {}: {e}", values.display())))?;
        Box::new(io::BufReader::new(f))
    };
    let (mut total, mut failed) = (0u64, 0u64);
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        let json = match format {
            CheckFormat::Jsonl => true,
            CheckFormat::Text => false,
            CheckFormat::Auto => line.trim_start().starts_with(['{', '[']),
        };
        let parsed = if json {
            parse_json_line(&line)
        } else {
            GenValue::parse(&line).map(|v| (None, v)).map_err(|e| e.to_string())
        };
        let verdict = parsed.and_then(|(rec_ty, v)| {
            let t = ty.map(str::to_string).or(rec_ty).ok_or("no type given (use --type)")?;
            gen.check(&t, &v).map_err(|e| e.to_string())
        });
        match verdict {
            Ok(()) => writeln!(out, "line {}: ok", i + 1)?,
            Err(e) => {
                failed += 1;
                writeln!(out, "line {}: FAIL: {e}", i + 1)?;
            }
        }
    }
    writeln!(err, "{total} values, {failed} failed")?;
    Ok(if failed == 0 { 0 } else { 1 })
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    path: &Path,
    k: u32,
    n: usize,
    seed: u64,
    max_draws: u64,
    grid: GridAxes,
    stats: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let csp = parse_csp(&read(path)?).map_err(|e| CliError::Domain(format!("parse: {}: {e}", path.display())))?;
    let names = csp.names();
    let mut sampler = PrtSampler::with_axes(csp.clone(), k, grid).with_max_draws(max_draws);
    if stats {
        let p = csp.propagate();
        match &p {
            Ok(p) => {
                let dom: Vec<String> = p.names().iter().zip(p.domains()).map(|(n, d)| format!("{n} in {d}")).collect();
                writeln!(err, "propagated: {}", dom.join(", "))?;
            }
            Err(_) => writeln!(err, "propagated: inconsistent")?,
        }
        let cells = sampler.grid().cell_count().map_or("many".into(), |c| c.to_string());
        let axes: Vec<&str> = sampler.axes().iter().map(|&i| names[i].as_str()).collect();
        let refuted = sampler.refute_all();
        writeln!(err, "grid over {}", axes.join(" "))?;
        writeln!(err, "cells: {cells}, refuted by propagation: {refuted}")?;
    }
    let mut rng = RandomStream::from_seed(seed);
    let print = |out: &mut dyn Write, sols: &[Vec<i64>]| -> io::Result<()> {
        for s in sols {
            let parts: Vec<String> = names.iter().zip(s).map(|(n, v)| format!("{n}={v}")).collect();
            writeln!(out, "{}", parts.join(" "))?;
        }
        Ok(())
    };
    match sampler.sample(n, &mut rng) {
        Ok(sols) => {
            print(out, &sols)?;
            Ok(0)
        }
        Err(SampleError::BudgetExceeded { draws, partial }) => {
            print(out, &partial)?;
            Err(CliError::Domain(format!(
                "solve: draw budget exhausted after {draws} draws with {} solutions",
                partial.len()
            )))
        }
        Err(e) => Err(CliError::Domain(format!("solve: {e}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intervals() {
        assert_eq!(parse_interval("-3..10").unwrap(), Interval::new(-3, 10));
        assert!(parse_interval("3..1").is_err());
        assert!(parse_interval("3").is_err());
        assert_eq!(parse_group_domain("2=0..4").unwrap(), (2, Interval::new(0, 4)));
    }

    #[test]
    fn records_round_trip() {
        let v = GenValue::parse("Node(Leaf, 3, Leaf)").unwrap();
        let line = record("bst", 1, &v);
        assert_eq!(parse_json_line(&line).unwrap(), (Some("bst".into()), v.clone()));
        assert_eq!(parse_json_line(&v.to_json()).unwrap(), (None, v));
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
