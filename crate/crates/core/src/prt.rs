//! Uniform sampling of CSP solutions.
//!
//! [`PrtSampler`] splits the propagated search box into `k^m` equal cells,
//! discards cells that propagation refutes, and draws uniform points from
//! uniformly chosen live cells until one satisfies the constraints. Since
//! every cell has the same volume, each solution is equally likely.
//!
//! The grid axes are chosen by [`GridAxes`]. By default the outputs of a
//! `sort` constraint replace its inputs as axes: a cell then fixes a range
//! for each sorted value, the inputs are drawn over their propagated box,
//! and a point counts for the cell only if its sorted values fall inside.
//!
//! The direct samplers handle a single ordering or alldiff constraint over
//! one shared range exactly, without rejection.

use std::collections::{HashMap, HashSet};

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::csp::{Constraint, Csp, Direction, Interval};

pub const DEFAULT_K: u32 = 2;
pub const DEFAULT_MAX_DRAWS: u64 = 1_000_000;

/// Grids with at most this many cells keep an explicit list of live cells.
const EXPLICIT_CELLS: u128 = 1 << 16;
/// Cells with at most this many points remember which points failed, so a
/// cell is dropped once all of its points are known to fail.
const MEMO_VOLUME: u128 = 4096;
/// Rejection attempts when looking for a live cell in a sparse virtual grid.
const VIRTUAL_PICK_TRIES: u32 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SampleError {
    #[error("Infeasible: {0}")]
    Infeasible(String),
    #[error("Inconsistent: every cell of the search box was refuted")]
    Inconsistent,
    #[error("budget of {draws} draws exhausted with {} of the requested solutions", partial.len())]
    BudgetExceeded { draws: u64, partial: Vec<Vec<i64>> },
}

/// Variables spanned by the sampler's grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GridAxes {
    /// Outputs of `sort` constraints, plus decision variables that feed no
    /// sort.
    #[default]
    SortOutputs,
    /// Decision variables only; sort outputs are computed afterwards.
    Decision,
}

impl GridAxes {
    pub fn select(self, csp: &Csp) -> Vec<usize> {
        let derived = csp.derived_vars();
        match self {
            GridAxes::Decision => (0..csp.num_vars()).filter(|&i| !derived[i]).collect(),
            GridAxes::SortOutputs => {
                let mut fed = vec![false; csp.num_vars()];
                for c in csp.constraints() {
                    if let Constraint::Sort { xs, ys } = c {
                        if ys.iter().all(|&y| derived[y]) {
                            xs.iter().for_each(|&x| fed[x] = true);
                        }
                    }
                }
                (0..csp.num_vars()).filter(|&i| derived[i] || !fed[i]).collect()
            }
        }
    }
}

/// Equal-volume tiling of a box. Each axis is widened upward to a multiple
/// of `k` and cut into `k` slices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxGrid {
    k: u32,
    origin: Vec<i64>,
    widths: Vec<u64>,
}

impl BoxGrid {
    pub fn fairly_divide(bounds: &[Interval], k: u32) -> BoxGrid {
        assert!(k >= 1, "k must be positive");
        let k64 = k as u64;
        let widths = bounds.iter().map(|b| b.width().div_ceil(k64).max(1)).collect();
        BoxGrid { k, origin: bounds.iter().map(|b| b.lo).collect(), widths }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn dims(&self) -> usize {
        self.origin.len()
    }

    /// `k^m`, or `None` when it does not fit in 128 bits.
    pub fn cell_count(&self) -> Option<u128> {
        (self.k as u128).checked_pow(self.dims() as u32)
    }

    /// Side lengths shared by every cell.
    pub fn cell_widths(&self) -> &[u64] {
        &self.widths
    }

    /// Points per cell, saturating.
    pub fn cell_volume(&self) -> u128 {
        self.widths.iter().fold(1u128, |v, &w| v.saturating_mul(w as u128))
    }

    /// Bounds of the cell at base-`k` digits `cell`, in `i128` since the
    /// widened box may leave the `i64` range.
    pub fn cell_bounds(&self, cell: &[u32]) -> Vec<(i128, i128)> {
        cell.iter()
            .enumerate()
            .map(|(i, &d)| {
                let lo = self.origin[i] as i128 + d as i128 * self.widths[i] as i128;
                (lo, lo + self.widths[i] as i128 - 1)
            })
            .collect()
    }

    fn digits(&self, mut id: u128) -> Vec<u32> {
        let k = self.k as u128;
        (0..self.dims())
            .map(|_| {
                let d = (id % k) as u32;
                id /= k;
                d
            })
            .collect()
    }

    fn random_cell(&self, rng: &mut (impl Rng + ?Sized)) -> Vec<u32> {
        (0..self.dims()).map(|_| rng.random_range(0..self.k)).collect()
    }
}

/// A cell: its index in an explicit grid, or its base-`k` digits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum CellKey {
    Id(usize),
    Digits(Vec<u32>),
}

const DEAD: usize = usize::MAX;

enum Cells {
    /// Every live cell id is listed; examined cells keep their data in
    /// `slots`. `pos[id]` is the index of `id` in `live`, or `DEAD`.
    Explicit {
        live: Vec<usize>,
        pos: Vec<usize>,
        slots: Vec<Option<CellInfo>>,
    },
    Virtual {
        total: Option<u128>,
        rejected: HashSet<Vec<u32>>,
        info: HashMap<Vec<u32>, CellInfo>,
    },
}

impl Cells {
    fn live_count(&self) -> Option<u128> {
        match self {
            Cells::Explicit { live, .. } => Some(live.len() as u128),
            Cells::Virtual { total, rejected, .. } => total.map(|t| t - rejected.len() as u128),
        }
    }

    fn get(&self, key: &CellKey) -> Option<&CellInfo> {
        match (self, key) {
            (Cells::Explicit { slots, .. }, CellKey::Id(id)) => slots[*id].as_ref(),
            (Cells::Virtual { info, .. }, CellKey::Digits(d)) => info.get(d),
            _ => unreachable!("cell keys match the grid kind"),
        }
    }

    fn get_mut(&mut self, key: &CellKey) -> Option<&mut CellInfo> {
        match (self, key) {
            (Cells::Explicit { slots, .. }, CellKey::Id(id)) => slots[*id].as_mut(),
            (Cells::Virtual { info, .. }, CellKey::Digits(d)) => info.get_mut(d),
            _ => unreachable!("cell keys match the grid kind"),
        }
    }

    fn insert(&mut self, key: &CellKey, cell: CellInfo) {
        match (self, key) {
            (Cells::Explicit { slots, .. }, CellKey::Id(id)) => slots[*id] = Some(cell),
            (Cells::Virtual { info, .. }, CellKey::Digits(d)) => {
                info.insert(d.clone(), cell);
            }
            _ => unreachable!("cell keys match the grid kind"),
        }
    }

    fn remove(&mut self, key: &CellKey) {
        match (self, key) {
            (Cells::Explicit { live, pos, slots }, CellKey::Id(id)) => {
                slots[*id] = None;
                let i = pos[*id];
                if i != DEAD {
                    pos[*id] = DEAD;
                    live.swap_remove(i);
                    if let Some(&moved) = live.get(i) {
                        pos[moved] = i;
                    }
                }
            }
            (Cells::Virtual { rejected, info, .. }, CellKey::Digits(d)) => {
                info.remove(d);
                rejected.insert(d.clone());
            }
            _ => unreachable!("cell keys match the grid kind"),
        }
    }

    fn pick(&self, grid: &BoxGrid, rng: &mut (impl Rng + ?Sized)) -> Option<CellKey> {
        match self {
            Cells::Explicit { live, .. } => Some(CellKey::Id(live[rng.random_range(0..live.len())])),
            Cells::Virtual { rejected, .. } => {
                for _ in 0..VIRTUAL_PICK_TRIES {
                    let key = grid.random_cell(rng);
                    if !rejected.contains(&key) {
                        return Some(CellKey::Digits(key));
                    }
                }
                None
            }
        }
    }
}

struct CellInfo {
    /// Offsets of points known to fail, for small cells.
    failed: Option<HashSet<u128>>,
    bounds: Vec<(i128, i128)>,
    /// Domains after propagating inside the cell.
    doms: Vec<Interval>,
    /// Share of the off-grid decision box that survives propagation in
    /// this cell. Drawing there after accepting with this probability is
    /// the same as drawing over the whole box and rejecting the rest.
    accept: f64,
}

enum Trial {
    Skipped,
    Found,
    Failed(u128),
}

/// Reusable sampler state. Refuted cells stay refuted across calls, so
/// repeated single draws are independent and get cheaper over time.
pub struct PrtSampler {
    csp: Csp,
    derived: Vec<bool>,
    decision: Vec<usize>,
    /// Grid axis of every variable, if it is one.
    axis_of: Vec<Option<usize>>,
    axes: Vec<usize>,
    /// Points per cell: grid-cell widths on decision axes times the
    /// propagated widths of decision variables off the grid.
    point_volume: u128,
    base: Vec<Interval>,
    grid: BoxGrid,
    cells: Cells,
    refuted: u64,
    max_draws: u64,
    unsat: bool,
}

impl PrtSampler {
    pub fn new(csp: Csp, k: u32) -> PrtSampler {
        Self::with_axes(csp, k, GridAxes::default())
    }

    pub fn with_axes(csp: Csp, k: u32, axes: GridAxes) -> PrtSampler {
        let derived = csp.derived_vars();
        let decision: Vec<usize> = (0..csp.num_vars()).filter(|&i| !derived[i]).collect();
        let axes = axes.select(&csp);
        let mut axis_of = vec![None; csp.num_vars()];
        for (a, &v) in axes.iter().enumerate() {
            axis_of[v] = Some(a);
        }
        let mut base = csp.domains().to_vec();
        let unsat = csp.propagate_domains(&mut base).is_err();
        let box_: Vec<Interval> = axes.iter().map(|&i| base[i]).collect();
        let grid = BoxGrid::fairly_divide(&box_, k);
        let point_volume = decision.iter().fold(1u128, |acc, &v| {
            let w = match axis_of[v] {
                Some(a) => grid.widths[a],
                None => base[v].width(),
            };
            acc.saturating_mul(w as u128)
        });
        let cells = match grid.cell_count() {
            Some(p) if p <= EXPLICIT_CELLS => {
                let p = p as usize;
                Cells::Explicit { live: (0..p).collect(), pos: (0..p).collect(), slots: (0..p).map(|_| None).collect() }
            }
            total => Cells::Virtual { total, rejected: HashSet::new(), info: HashMap::new() },
        };
        PrtSampler {
            csp,
            derived,
            decision,
            axis_of,
            axes,
            point_volume,
            base,
            grid,
            cells,
            refuted: 0,
            max_draws: DEFAULT_MAX_DRAWS,
            unsat,
        }
    }

    pub fn with_max_draws(mut self, max_draws: u64) -> Self {
        self.max_draws = max_draws;
        self
    }

    pub fn csp(&self) -> &Csp {
        &self.csp
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    /// Variables spanned by the grid, in axis order.
    pub fn axes(&self) -> &[usize] {
        &self.axes
    }

    /// Cells dropped so far, by propagation or exhaustion.
    pub fn refuted_cells(&self) -> u64 {
        self.refuted
    }

    pub fn live_cells(&self) -> Option<u128> {
        if self.unsat {
            return Some(0);
        }
        self.cells.live_count()
    }

    /// Checks every cell of an explicit grid against the constraints and
    /// returns the number refuted. Virtual grids are left alone.
    pub fn refute_all(&mut self) -> u64 {
        if self.unsat {
            return self.refuted;
        }
        if let Cells::Explicit { live, .. } = &self.cells {
            for id in live.clone() {
                let key = CellKey::Id(id);
                if self.cells.get(&key).is_none() {
                    self.visit(&key);
                }
            }
        }
        self.refuted
    }

    /// Draws up to `n` distinct solutions.
    pub fn sample(&mut self, n: usize, rng: &mut (impl Rng + ?Sized)) -> Result<Vec<Vec<i64>>, SampleError> {
        if self.unsat {
            return Err(SampleError::Inconsistent);
        }
        let mut out: Vec<Vec<i64>> = Vec::new();
        let mut seen: HashSet<Vec<i64>> = HashSet::new();
        let mut draws = 0u64;
        let mut t = vec![0i64; self.csp.num_vars()];
        while out.len() < n {
            if self.cells.live_count() == Some(0) {
                break;
            }
            if draws >= self.max_draws {
                return Err(SampleError::BudgetExceeded { draws, partial: out });
            }
            let Some(key) = self.cells.pick(&self.grid, rng) else {
                draws += 1;
                continue;
            };
            if self.cells.get(&key).is_none() && !self.visit(&key) {
                continue;
            }
            draws += 1;
            match self.trial(&key, &mut t, rng) {
                Trial::Skipped => {}
                Trial::Found => {
                    if seen.insert(t.clone()) {
                        out.push(t.clone());
                    }
                }
                Trial::Failed(offset) => {
                    let info = self.cells.get_mut(&key).expect("examined cell has info");
                    if let Some(failed) = &mut info.failed {
                        failed.insert(offset);
                        if failed.len() as u128 == self.point_volume {
                            self.reject(&key);
                        }
                    }
                }
            }
        }
        if out.is_empty() && n > 0 {
            return Err(SampleError::Inconsistent);
        }
        if out.len() < n {
            return Err(SampleError::BudgetExceeded { draws, partial: out });
        }
        Ok(out)
    }

    /// Draws one point of the cell into `t` and tests it.
    fn trial(&self, key: &CellKey, t: &mut [i64], rng: &mut (impl Rng + ?Sized)) -> Trial {
        let info = self.cells.get(key).expect("examined cell has info");
        if info.accept < 1.0 && !rng.random_bool(info.accept) {
            return Trial::Skipped;
        }
        let mut offset: u128 = 0;
        let mut in_domain = true;
        for &var in &self.decision {
            let (v, w, r) = match self.axis_of[var] {
                Some(a) => {
                    let w = self.grid.widths[a];
                    let r = rng.random_range(0..w) as i128;
                    (info.bounds[a].0 + r, w, r)
                }
                None => {
                    let d = info.doms[var];
                    let v = rng.random_range(d.lo..=d.hi) as i128;
                    (v, self.base[var].width(), v - self.base[var].lo as i128)
                }
            };
            offset = offset.wrapping_mul(w as u128).wrapping_add(r as u128);
            let d = self.csp.domains()[var];
            if v < d.lo as i128 || v > d.hi as i128 {
                in_domain = false;
            } else {
                t[var] = v as i64;
            }
        }
        if info.failed.as_ref().is_some_and(|f| f.contains(&offset)) {
            return Trial::Skipped;
        }
        if in_domain {
            self.csp.complete(t, &self.derived);
            // derived axes must land in the drawn cell
            in_domain = self
                .axes
                .iter()
                .zip(&info.bounds)
                .all(|(&v, &(lo, hi))| !self.derived[v] || (lo..=hi).contains(&(t[v] as i128)));
        }
        if in_domain && self.csp.is_satisfied(t) {
            Trial::Found
        } else {
            Trial::Failed(offset)
        }
    }

    /// Examines an unvisited cell, storing its data if it survives
    /// propagation and dropping it otherwise. Returns whether it is live.
    fn visit(&mut self, key: &CellKey) -> bool {
        let digits = match key {
            CellKey::Id(id) => self.grid.digits(*id as u128),
            CellKey::Digits(d) => d.clone(),
        };
        match self.examine(&digits) {
            Some(info) => {
                self.cells.insert(key, info);
                true
            }
            None => {
                self.reject(key);
                false
            }
        }
    }

    /// Propagates inside the cell; `None` when refuted.
    fn examine(&self, digits: &[u32]) -> Option<CellInfo> {
        let mut doms = self.base.clone();
        let bounds = self.grid.cell_bounds(digits);
        for (&var, &(lo, hi)) in self.axes.iter().zip(&bounds) {
            let d = doms[var];
            let lo = lo.max(d.lo as i128);
            let hi = hi.min(d.hi as i128);
            if lo > hi {
                return None;
            }
            doms[var] = Interval::new(lo as i64, hi as i64);
        }
        self.csp.propagate_domains(&mut doms).ok()?;
        let failed = (self.point_volume <= MEMO_VOLUME).then(HashSet::new);
        let accept = self
            .decision
            .iter()
            .filter(|&&v| self.axis_of[v].is_none())
            .map(|&v| doms[v].width() as f64 / self.base[v].width() as f64)
            .product();
        Some(CellInfo { failed, bounds, doms, accept })
    }

    fn reject(&mut self, key: &CellKey) {
        self.refuted += 1;
        self.cells.remove(key);
    }
}

/// Draws up to `n` distinct solutions of `csp` with a fresh sampler.
pub fn prt_sample(csp: &Csp, k: u32, n: usize, rng: &mut (impl Rng + ?Sized)) -> Result<Vec<Vec<i64>>, SampleError> {
    PrtSampler::new(csp.clone(), k).sample(n, rng)
}

/// Sorted uniform `len`-subset of `0..r`.
fn subset_offsets(r: u128, len: usize, rng: &mut (impl Rng + ?Sized)) -> Vec<u128> {
    let mut out: Vec<u128> = match usize::try_from(r) {
        Ok(r) => index::sample(rng, r, len).into_iter().map(|i| i as u128).collect(),
        Err(_) => {
            // ranges past usize are far larger than any len we can hold
            let mut set = HashSet::with_capacity(len);
            while set.len() < len {
                set.insert(rng.random_range(0..r));
            }
            set.into_iter().collect()
        }
    };
    out.sort_unstable();
    out
}

fn range_size(lo: i64, hi: i64) -> u128 {
    if hi < lo {
        0
    } else {
        (hi as i128 - lo as i128 + 1) as u128
    }
}

/// Uniform non-decreasing (or strictly increasing) sequence over `[lo, hi]`.
pub fn sample_increasing(
    len: usize,
    lo: i64,
    hi: i64,
    strict: bool,
    rng: &mut (impl Rng + ?Sized),
) -> Result<Vec<i64>, SampleError> {
    let r = range_size(lo, hi);
    if strict {
        if (len as u128) > r {
            return Err(SampleError::Infeasible(format!("{len} strictly increasing values do not fit in {lo}..{hi}")));
        }
        return Ok(subset_offsets(r, len, rng).into_iter().map(|o| (lo as i128 + o as i128) as i64).collect());
    }
    if len > 0 && r == 0 {
        return Err(SampleError::Infeasible(format!("empty range {lo}..{hi}")));
    }
    // z_i = y_i + i is strictly increasing over a range widened by len - 1
    let widened = r + len.saturating_sub(1) as u128;
    Ok(subset_offsets(widened, len, rng)
        .into_iter()
        .enumerate()
        .map(|(i, o)| (lo as i128 + o as i128 - i as i128) as i64)
        .collect())
}

pub fn sample_decreasing(
    len: usize,
    lo: i64,
    hi: i64,
    strict: bool,
    rng: &mut (impl Rng + ?Sized),
) -> Result<Vec<i64>, SampleError> {
    let mut v = sample_increasing(len, lo, hi, strict, rng)?;
    v.reverse();
    Ok(v)
}

/// Uniform sequence of pairwise distinct values over `[lo, hi]`.
pub fn sample_alldiff(len: usize, lo: i64, hi: i64, rng: &mut (impl Rng + ?Sized)) -> Result<Vec<i64>, SampleError> {
    let r = range_size(lo, hi);
    if (len as u128) > r {
        return Err(SampleError::Infeasible(format!("{len} distinct values do not fit in {lo}..{hi}")));
    }
    let mut v: Vec<i64> = subset_offsets(r, len, rng).into_iter().map(|o| (lo as i128 + o as i128) as i64).collect();
    v.shuffle(rng);
    Ok(v)
}

enum Part {
    Free(Vec<(usize, Interval)>),
    Direct { scope: Vec<usize>, con: Constraint, dom: Interval },
    Prt { vars: Vec<usize>, sampler: Box<PrtSampler> },
}

/// Draws independent uniform solutions of a CSP, solving each group of
/// connected variables on its own and using the direct samplers where a
/// group is a single ordering or alldiff constraint over a shared range.
pub struct UniformSolver {
    num_vars: usize,
    parts: Vec<Part>,
}

impl UniformSolver {
    pub fn new(csp: &Csp, k: u32) -> UniformSolver {
        Self::with_max_draws(csp, k, DEFAULT_MAX_DRAWS)
    }

    pub fn with_max_draws(csp: &Csp, k: u32, max_draws: u64) -> UniformSolver {
        let parts = csp
            .components()
            .into_iter()
            .map(|(vars, cons)| {
                if cons.is_empty() {
                    return Part::Free(vars.iter().map(|&v| (v, csp.domains()[v])).collect());
                }
                if let [ci] = cons[..] {
                    let con = &csp.constraints()[ci];
                    let scope = match con {
                        Constraint::AllDiff(s) | Constraint::Chain { scope: s, .. } => Some(s),
                        _ => None,
                    };
                    if let Some(scope) = scope {
                        let dom = csp.domains()[scope[0]];
                        let distinct: HashSet<usize> = scope.iter().copied().collect();
                        if distinct.len() == scope.len()
                            && scope.len() == vars.len()
                            && scope.iter().all(|&v| csp.domains()[v] == dom)
                        {
                            return Part::Direct { scope: scope.clone(), con: con.clone(), dom };
                        }
                    }
                }
                let sub = csp.restrict(&vars, &cons);
                Part::Prt { vars, sampler: Box::new(PrtSampler::new(sub, k).with_max_draws(max_draws)) }
            })
            .collect();
        UniformSolver { num_vars: csp.num_vars(), parts }
    }

    /// Number of groups solved by the cell sampler.
    pub fn prt_parts(&self) -> usize {
        self.parts.iter().filter(|p| matches!(p, Part::Prt { .. })).count()
    }

    pub fn draw(&mut self, rng: &mut (impl Rng + ?Sized)) -> Result<Vec<i64>, SampleError> {
        let mut t = vec![0i64; self.num_vars];
        for part in &mut self.parts {
            match part {
                Part::Free(vars) => {
                    for &(v, d) in vars.iter() {
                        t[v] = rng.random_range(d.lo..=d.hi);
                    }
                }
                Part::Direct { scope, con, dom } => {
                    let vals = match con {
                        Constraint::AllDiff(_) => sample_alldiff(scope.len(), dom.lo, dom.hi, rng)?,
                        Constraint::Chain { dir: Direction::Increasing, strict, .. } => {
                            sample_increasing(scope.len(), dom.lo, dom.hi, *strict, rng)?
                        }
                        Constraint::Chain { dir: Direction::Decreasing, strict, .. } => {
                            sample_decreasing(scope.len(), dom.lo, dom.hi, *strict, rng)?
                        }
                        _ => unreachable!("direct parts hold alldiff or chain"),
                    };
                    for (&v, x) in scope.iter().zip(vals) {
                        t[v] = x;
                    }
                }
                Part::Prt { vars, sampler } => {
                    let sol = sampler.sample(1, rng)?.pop().expect("one solution requested");
                    for (&v, x) in vars.iter().zip(sol) {
                        t[v] = x;
                    }
                }
            }
        }
        Ok(t)
    }
}

/// One uniform solution of `csp`.
pub fn solve_uniform(csp: &Csp, k: u32, rng: &mut (impl Rng + ?Sized)) -> Result<Vec<i64>, SampleError> {
    UniformSolver::new(csp, k).draw(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::parse_csp;
    use crate::rng::RandomStream;

    fn rng() -> RandomStream {
        RandomStream::from_seed(7)
    }

    #[test]
    fn fair_division_examples() {
        let g = BoxGrid::fairly_divide(&[Interval::new(0, 3), Interval::new(0, 3)], 2);
        assert_eq!(g.cell_count(), Some(4));
        assert_eq!(g.cell_widths(), &[2, 2]);
        let g = BoxGrid::fairly_divide(&[Interval::new(0, 4)], 2);
        assert_eq!(g.cell_bounds(&[0]), vec![(0, 2)]);
        assert_eq!(g.cell_bounds(&[1]), vec![(3, 5)]);
    }

    #[test]
    fn singleton_space() {
        let c = parse_csp("x1 in 0..0").unwrap();
        assert_eq!(prt_sample(&c, 2, 1, &mut rng()).unwrap(), vec![vec![0]]);
    }

    #[test]
    fn contradiction_is_inconsistent() {
        let c = parse_csp("x in 0..9\nx = x + 1").unwrap();
        assert_eq!(prt_sample(&c, 2, 1, &mut rng()), Err(SampleError::Inconsistent));
    }

    #[test]
    fn exhausted_cells_prove_inconsistency() {
        // propagation cannot see that no even sum hits 7, point checks can
        let c = parse_csp("a in 0..5\nb in 0..5\n2*a + 2*b = 7").unwrap();
        let mut s = PrtSampler::new(c, 2);
        assert_eq!(s.sample(1, &mut rng()), Err(SampleError::Inconsistent));
        assert_eq!(s.live_cells(), Some(0));
    }

    #[test]
    fn budget_is_reported() {
        let c = parse_csp("a in 0..1000000\nb in 0..1000000\na = b").unwrap();
        let mut s = PrtSampler::new(c, 2).with_max_draws(10);
        match s.sample(5, &mut rng()) {
            Err(SampleError::BudgetExceeded { draws, .. }) => assert_eq!(draws, 10),
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn distinct_solutions() {
        let c = parse_csp("a in 0..3\nb in 0..3\na + b = 3").unwrap();
        let mut sols = prt_sample(&c, 2, 4, &mut rng()).unwrap();
        sols.sort();
        assert_eq!(sols, vec![vec![0, 3], vec![1, 2], vec![2, 1], vec![3, 0]]);
    }

    #[test]
    fn tree_keys_solutions_satisfy() {
        let c = parse_csp(include_str!("../fixtures/tree_keys.csp")).unwrap();
        let sols = prt_sample(&c, 2, 3, &mut rng()).unwrap();
        assert_eq!(sols.len(), 3);
        assert!(sols.iter().all(|s| c.is_satisfied(s)));
    }

    #[test]
    fn tree_keys_refutation_counts() {
        let c = parse_csp(include_str!("../fixtures/tree_keys.csp")).unwrap();
        let mut outputs = PrtSampler::new(c.clone(), 2);
        assert_eq!(outputs.grid().cell_count(), Some(64));
        assert_eq!(outputs.refute_all(), 60);
        let mut decision = PrtSampler::with_axes(c, 2, GridAxes::Decision);
        assert_eq!(decision.refute_all(), 17);
    }

    #[test]
    fn both_grids_sample_uniformly() {
        let c = parse_csp("x1 in 0..3\nx2 in 0..4\nx3 in 1..3\nsort(x1..x3 -> y1..y3)\ny3 = y1 + 2").unwrap();
        let support = c.enumerate_solutions(1 << 16).unwrap();
        assert!(support.len() > 10);
        for axes in [GridAxes::SortOutputs, GridAxes::Decision] {
            let mut s = PrtSampler::with_axes(c.clone(), 2, axes);
            let mut r = rng();
            let draws = (0..20_000).map(|_| s.sample(1, &mut r).unwrap().pop().unwrap());
            let report = crate::stats::uniformity(&support, draws, 0.001);
            assert!(report.passed(), "{axes:?}: {report}");
        }
    }

    #[test]
    fn direct_samplers_respect_shape() {
        let mut r = rng();
        assert_eq!(sample_increasing(1, 7, 7, true, &mut r).unwrap(), vec![7]);
        for _ in 0..200 {
            let v = sample_increasing(5, -2, 2, false, &mut r).unwrap();
            assert!(v.windows(2).all(|w| w[0] <= w[1]) && v.iter().all(|x| (-2..=2).contains(x)));
            let v = sample_decreasing(4, 0, 5, true, &mut r).unwrap();
            assert!(v.windows(2).all(|w| w[0] > w[1]));
            let mut v = sample_alldiff(4, 0, 3, &mut r).unwrap();
            v.sort();
            assert_eq!(v, vec![0, 1, 2, 3]);
        }
        assert!(matches!(sample_increasing(10, 0, 4, true, &mut r), Err(SampleError::Infeasible(_))));
        assert!(matches!(sample_alldiff(3, 0, 1, &mut r), Err(SampleError::Infeasible(_))));
        let wide = sample_increasing(3, i64::MIN, i64::MAX, true, &mut r).unwrap();
        assert!(wide[0] < wide[1] && wide[1] < wide[2]);
    }

    #[test]
    fn solver_splits_components() {
        let c = parse_csp(
            "a1 in 0..9\na2 in 0..9\na3 in 0..9\nb in 3..4\nc1 in 0..5\nc2 in 0..5\n\
             increasing_strict(a1..a3)\nc1 + c2 = 5",
        )
        .unwrap();
        let mut s = UniformSolver::new(&c, 2);
        assert_eq!(s.prt_parts(), 1);
        let mut r = rng();
        for _ in 0..50 {
            let t = s.draw(&mut r).unwrap();
            assert!(c.is_satisfied(&t));
        }
    }
}
