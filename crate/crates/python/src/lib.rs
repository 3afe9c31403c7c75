//! Python bindings: generators for constrained algebraic types, the
//! uniform CSP sampler and the direct samplers.
//!
//! Values cross the boundary as strings in the JSON or text form, which
//! keeps very deep values away from Python's recursion limit.

use std::collections::BTreeMap;

use ctgen_core::csp::{parse_csp, Csp, Interval};
use ctgen_core::prt::{self, GridAxes, PrtSampler};
use ctgen_core::{parse_decls, GenConfig, GenValue, Generator, RandomStream};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// JSON first, then the text form.
fn parse_value(text: &str) -> PyResult<GenValue> {
    GenValue::from_json(text).or_else(|_| GenValue::parse(text)).map_err(value_error)
}

fn grid_axes(name: &str) -> PyResult<GridAxes> {
    match name {
        "outputs" => Ok(GridAxes::SortOutputs),
        "decision" => Ok(GridAxes::Decision),
        other => Err(PyValueError::new_err(format!("unknown grid {other:?}, expected \"outputs\" or \"decision\""))),
    }
}

/// Generator for the types of a declaration source.
#[pyclass(name = "Generator", module = "ctgen", frozen)]
struct PyGenerator {
    inner: Generator,
}

#[pymethods]
impl PyGenerator {
    #[new]
    fn new(source: &str) -> PyResult<Self> {
        let ts = parse_decls(source).map_err(value_error)?;
        Ok(PyGenerator { inner: Generator::new(ts).map_err(value_error)? })
    }

    #[staticmethod]
    fn from_file(path: std::path::PathBuf) -> PyResult<Self> {
        let source = std::fs::read_to_string(&path).map_err(|e| value_error(format!("{}: {e}", path.display())))?;
        Self::new(&source)
    }

    /// Declared type names in declaration order.
    fn types(&self) -> Vec<String> {
        self.inner.type_system().names().map(str::to_string).collect()
    }

    /// Generates `count` values of `ty` near `size` as JSON (or text)
    /// strings. The same seed gives the same values.
    #[pyo3(signature = (ty, size=10, count=1, seed=0, domain=None, eps=None, format="json", verify=true))]
    #[allow(clippy::too_many_arguments)]
    fn generate(
        &self,
        py: Python<'_>,
        ty: &str,
        size: u64,
        count: usize,
        seed: u64,
        domain: Option<(i64, i64)>,
        eps: Option<u64>,
        format: &str,
        verify: bool,
    ) -> PyResult<Vec<String>> {
        let json = match format {
            "json" => true,
            "text" => false,
            other => return Err(PyValueError::new_err(format!("unknown format {other:?}"))),
        };
        let mut cfg = GenConfig { eps, verify, ..GenConfig::with_size(size) };
        if let Some((lo, hi)) = domain {
            if lo > hi {
                return Err(PyValueError::new_err(format!("empty domain {lo}..{hi}")));
            }
            cfg.domain = Interval::new(lo, hi);
        }
        py.detach(|| {
            let mut rng = RandomStream::from_seed(seed);
            (0..count)
                .map(|_| {
                    let v = self.inner.generate(ty, &cfg, &mut rng).map_err(|e| format!("{}: {e}", e.stage()))?;
                    Ok(if json { v.to_json() } else { v.to_string() })
                })
                .collect::<Result<Vec<String>, String>>()
        })
        .map_err(PyValueError::new_err)
    }

    /// The tuned grammar of `ty` at `size`, as printed by `ctgen tune`.
    fn tune(&self, ty: &str, size: u64) -> PyResult<String> {
        let g = self.inner.grammar(ty, size, None).map_err(value_error)?;
        Ok(g.to_string())
    }

    /// Whether `value` (JSON or text) is a valid value of `ty`.
    fn check(&self, ty: &str, value: &str) -> PyResult<bool> {
        Ok(self.violation(ty, value)?.is_none())
    }

    /// Why `value` is not a valid value of `ty`, or `None` if it is.
    fn violation(&self, ty: &str, value: &str) -> PyResult<Option<String>> {
        let v = parse_value(value)?;
        Ok(self.inner.check(ty, &v).err().map(|e| e.to_string()))
    }

    /// Collected integers of `value` per group, in depth-first order.
    fn collect_values(&self, ty: &str, value: &str) -> PyResult<BTreeMap<u32, Vec<i64>>> {
        let v = parse_value(value)?;
        self.inner.collect_values(ty, &v).map_err(value_error)
    }
}

/// A finite-domain constraint problem in the textual CSP format.
#[pyclass(name = "Csp", module = "ctgen", frozen)]
struct PyCsp {
    inner: Csp,
}

#[pymethods]
impl PyCsp {
    #[new]
    fn new(source: &str) -> PyResult<Self> {
        Ok(PyCsp { inner: parse_csp(source).map_err(value_error)? })
    }

    fn names(&self) -> Vec<String> {
        self.inner.names().to_vec()
    }

    fn domains(&self) -> Vec<(i64, i64)> {
        self.inner.domains().iter().map(|d| (d.lo, d.hi)).collect()
    }

    /// Domains after propagation, or `None` if propagation proves the
    /// problem unsatisfiable.
    fn propagate(&self) -> Option<Vec<(i64, i64)>> {
        self.inner.propagate().ok().map(|p| p.domains().iter().map(|d| (d.lo, d.hi)).collect())
    }

    fn is_satisfied(&self, values: Vec<i64>) -> PyResult<bool> {
        if values.len() != self.inner.num_vars() {
            return Err(PyValueError::new_err(format!("expected {} values", self.inner.num_vars())));
        }
        Ok(self.inner.is_satisfied(&values))
    }

    /// Up to `n` distinct uniformly drawn solutions, in variable order.
    #[pyo3(signature = (n=1, k=2, seed=0, grid="outputs"))]
    fn solve(&self, py: Python<'_>, n: usize, k: u32, seed: u64, grid: &str) -> PyResult<Vec<Vec<i64>>> {
        if k < 2 {
            return Err(PyValueError::new_err("k must be at least 2"));
        }
        let axes = grid_axes(grid)?;
        py.detach(|| {
            let mut sampler = PrtSampler::with_axes(self.inner.clone(), k, axes);
            sampler.sample(n, &mut RandomStream::from_seed(seed))
        })
        .map_err(value_error)
    }

    /// `(refuted, total)` cells of the `k` grid after propagating in each
    /// cell. `total` is `None` for grids too large to scan.
    #[pyo3(signature = (k=2, grid="outputs"))]
    fn refuted_cells(&self, k: u32, grid: &str) -> PyResult<(u64, Option<u128>)> {
        if k < 2 {
            return Err(PyValueError::new_err("k must be at least 2"));
        }
        let mut sampler = PrtSampler::with_axes(self.inner.clone(), k, grid_axes(grid)?);
        let total = sampler.grid().cell_count();
        Ok((sampler.refute_all(), total))
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }
}

/// A uniform ordered sequence of `length` integers in `lo..=hi`.
#[pyfunction]
#[pyo3(signature = (length, lo, hi, strict=false, seed=0))]
fn sample_increasing(length: usize, lo: i64, hi: i64, strict: bool, seed: u64) -> PyResult<Vec<i64>> {
    prt::sample_increasing(length, lo, hi, strict, &mut RandomStream::from_seed(seed)).map_err(value_error)
}

/// A uniform sequence of `length` distinct integers in `lo..=hi`.
#[pyfunction]
#[pyo3(signature = (length, lo, hi, seed=0))]
fn sample_alldiff(length: usize, lo: i64, hi: i64, seed: u64) -> PyResult<Vec<i64>> {
    prt::sample_alldiff(length, lo, hi, &mut RandomStream::from_seed(seed)).map_err(value_error)
}

#[pymodule]
fn ctgen(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGenerator>()?;
    m.add_class::<PyCsp>()?;
    m.add_function(wrap_pyfunction!(sample_increasing, m)?)?;
    m.add_function(wrap_pyfunction!(sample_alldiff, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
