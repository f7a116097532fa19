//! Top-level multiplication: the blocked output-insensitive algorithm, the
//! estimate, color and compress pipeline, and the choice between them.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::cmm::{cmm_multiply, CmmParams};
use crate::coloring::{color, ColoringParams};
use crate::constants::MONTE_CARLO_D_CONSTANT;
use crate::dvspmm::stored_row_times_matrix_emit;
use crate::error::Error;
use crate::hashing::derive_seed;
use crate::io::IoTally;
use crate::matrix::{log2_dim, Axis, Disk, IndexSet, Layout, SparseMatrix, Triple};
use crate::semiring::Semiring;
use crate::sketch::{estimate_total, SketchParams};

/// Receives every output entry. With a ledger it rejects an `(i, j)` seen
/// before.
#[derive(Debug)]
pub struct EmitSink<F> {
    callback: F,
    ledger: Option<BTreeSet<(u32, u32)>>,
    count: u64,
}

impl<F> EmitSink<F> {
    pub fn new(callback: F) -> Self {
        EmitSink {
            callback,
            ledger: None,
            count: 0,
        }
    }

    pub fn with_ledger(callback: F) -> Self {
        EmitSink {
            callback,
            ledger: Some(BTreeSet::new()),
            count: 0,
        }
    }

    pub fn emit<S>(&mut self, t: Triple<S>) -> Result<(), Error>
    where
        F: FnMut(Triple<S>) -> Result<(), Error>,
    {
        if let Some(ledger) = &mut self.ledger {
            if !ledger.insert((t.row, t.col)) {
                return Err(Error::DuplicateEmission { row: t.row, col: t.col });
            }
        }
        self.count += 1;
        (self.callback)(t)
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn into_callback(self) -> F {
        self.callback
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Naive,
    MonteCarlo,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Naive => "naive",
            Algorithm::MonteCarlo => "cmm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    Naive,
    Cmm,
    Either,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Auto,
    Naive,
    Cmm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunReport {
    pub algorithm: Algorithm,
    /// What the selector said, when `Mode::Auto` ran it.
    pub selection: Option<Selection>,
    pub n: usize,
    pub dim: u32,
    pub z_hat: Option<f64>,
    pub memory: usize,
    pub block: usize,
    pub tally: IoTally,
    pub emitted: u64,
    pub colors: u32,
    pub subproblems: usize,
    /// False when some subproblem produced more entries than its bound,
    /// which means an estimate was off and the output may be incomplete.
    pub success: bool,
}

impl RunReport {
    /// `N^2 / (M B)`.
    pub fn bound_naive(&self) -> f64 {
        let n = self.n as f64;
        n * n / (self.memory as f64 * self.block as f64)
    }

    /// `N sqrt(Z_hat) / (B sqrt(M))`, with `Z_hat = 0` when nothing was
    /// estimated.
    pub fn bound_cmm(&self) -> f64 {
        let z = self.z_hat.unwrap_or(0.0).max(0.0);
        self.n as f64 * libm::sqrt(z) / (self.block as f64 * libm::sqrt(self.memory as f64))
    }
}

/// Settings of the randomized pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloParams {
    pub estimate: SketchParams,
    pub coloring: ColoringParams,
}

impl MonteCarloParams {
    /// Total estimate at `eps = 1 / log N`, `delta = 1 / U`; coloring as in
    /// [`ColoringParams::new`]; default CMM parameters.
    pub fn new(memory: usize, dim: u32, n: usize) -> Result<Self, Error> {
        let eps = 1.0 / log2_dim(n.min(u32::MAX as usize) as u32) as f64;
        let estimate = SketchParams::new(eps, 1.0 / dim.max(1) as f64)?.with_d_constant(MONTE_CARLO_D_CONSTANT);
        let cmm = CmmParams::with_defaults(memory, dim)?;
        Ok(MonteCarloParams {
            estimate,
            coloring: ColoringParams::new(cmm, dim)?,
        })
    }
}

/// Compressed when `2 sqrt(Z M) < N`, blocked when
/// `sqrt(Z M) > 2 N`.
pub fn select_algorithm(n: usize, memory: usize, z_hat: f64) -> Selection {
    let n = n as f64;
    let root = libm::sqrt(z_hat.max(0.0) * memory as f64);
    if 2.0 * root < n {
        Selection::Cmm
    } else if root > 2.0 * n {
        Selection::Naive
    } else {
        Selection::Either
    }
}

fn check_dims<S: Semiring>(a: &SparseMatrix<S>, c: &SparseMatrix<S>) -> Result<u32, Error> {
    if a.dim() != c.dim() {
        return Err(Error::DimensionMismatch(a.dim(), c.dim()));
    }
    Ok(a.dim())
}

fn report<S: Semiring>(
    disk: &Disk<S>,
    algorithm: Algorithm,
    a: &SparseMatrix<S>,
    c: &SparseMatrix<S>,
    start: IoTally,
) -> RunReport {
    RunReport {
        algorithm,
        selection: None,
        n: a.nnz() + c.nnz(),
        dim: a.dim(),
        z_hat: None,
        memory: disk.config().memory(),
        block: disk.config().block(),
        tally: disk.tally().since(start),
        emitted: 0,
        colors: 1,
        subproblems: 0,
        success: true,
    }
}

/// Rows of `A` with more than this many entries go through the vector
/// path; the rest are packed into groups of at most `budget` words
/// (entries plus two words per row).
fn naive_limits(memory: usize, block: usize) -> (usize, usize) {
    let budget = memory - 2 * block;
    (budget, (memory / 2).min(budget - 2))
}

/// Blocked multiplication: rows of `A` are packed into groups that fit in
/// memory and each group is multiplied during one scan of `C` in
/// column-major order. Exact and deterministic.
pub fn naive_blocked_multiply<S, F>(
    disk: &Disk<S>,
    a: &SparseMatrix<S>,
    c: &SparseMatrix<S>,
    sink: &mut EmitSink<F>,
) -> Result<RunReport, Error>
where
    S: Semiring,
    F: FnMut(Triple<S>) -> Result<(), Error>,
{
    let dim = check_dims(a, c)?;
    let start = disk.tally();
    let before = sink.count();
    let (c_cm, c_sorted) = c.ensure_layout(disk, Layout::ColumnMajor)?;
    let (a_rm, a_sorted) = if a.nnz() == 0 || c.nnz() == 0 {
        (*a, false)
    } else {
        a.ensure_layout(disk, Layout::RowMajor)?
    };
    let result = if a.nnz() == 0 || c.nnz() == 0 {
        Ok(())
    } else {
        naive_rows(disk, dim, &a_rm, &c_cm, sink)
    };
    if a_sorted {
        a_rm.release(disk);
    }
    if c_sorted {
        c_cm.release(disk);
    }
    result?;
    let mut rep = report(disk, Algorithm::Naive, a, c, start);
    rep.emitted = sink.count() - before;
    Ok(rep)
}

fn naive_rows<S, F>(
    disk: &Disk<S>,
    dim: u32,
    a_rm: &SparseMatrix<S>,
    c_cm: &SparseMatrix<S>,
    sink: &mut EmitSink<F>,
) -> Result<(), Error>
where
    S: Semiring,
    F: FnMut(Triple<S>) -> Result<(), Error>,
{
    let cfg = disk.config();
    let (budget, heavy_limit) = naive_limits(cfg.memory(), cfg.block());

    let _group_memory = disk.reserve(budget)?;
    let mut heavy = Vec::new();
    let mut group: Vec<Triple<S>> = Vec::new();
    let mut rows_in_group = 0usize;
    let mut row_start = 0usize;
    let mut current = (u32::MAX, 0usize);
    disk.scan(a_rm.run(), |t| {
        if t.row != current.0 {
            current = (t.row, 0);
            row_start = group.len();
            rows_in_group += 1;
        }
        current.1 += 1;
        if current.1 > heavy_limit {
            // Heavy rows are dropped here and multiplied afterwards.
            if current.1 == heavy_limit + 1 {
                group.truncate(row_start);
                rows_in_group -= 1;
                heavy.push(t.row);
            }
            return Ok(());
        }
        if group.len() + 1 + 2 * rows_in_group > budget {
            // The row being read moves on to the next group.
            let tail = group.split_off(row_start);
            multiply_group(disk, &mut group, c_cm, sink)?;
            group = tail;
            row_start = 0;
            rows_in_group = 1;
        }
        group.push(*t);
        Ok(())
    })?;
    if !group.is_empty() {
        multiply_group(disk, &mut group, c_cm, sink)?;
    }
    drop(group);
    drop(_group_memory);

    for &r in &heavy {
        let row = a_rm.restrict(disk, &IndexSet::from_indices(dim, [r]), Axis::Rows)?;
        let done = stored_row_times_matrix_emit(disk, r, &row, c_cm, |t| sink.emit(t));
        row.release(disk);
        done?;
    }
    Ok(())
}

/// Multiplies the pinned rows in `group` (row-major) by `C` during one scan
/// of `C` in column-major order.
fn multiply_group<S, F>(
    disk: &Disk<S>,
    group: &mut [Triple<S>],
    c_cm: &SparseMatrix<S>,
    sink: &mut EmitSink<F>,
) -> Result<(), Error>
where
    S: Semiring,
    F: FnMut(Triple<S>) -> Result<(), Error>,
{
    let mut rows: Vec<u32> = group.iter().map(|t| t.row).collect();
    rows.dedup();
    // Index the group by inner index `k`.
    group.sort_unstable_by_key(|t| (t.col, t.row));
    let mut acc = alloc::vec![S::zero(); rows.len()];
    let mut touched: Vec<u32> = Vec::new();
    let mut column = u32::MAX;

    let mut flush = |column: u32, acc: &mut [S], touched: &mut Vec<u32>| -> Result<(), Error> {
        touched.sort_unstable();
        for &local in touched.iter() {
            let v = core::mem::replace(&mut acc[local as usize], S::zero());
            if !v.is_zero() {
                sink.emit(Triple::new(rows[local as usize], column, v))?;
            }
        }
        touched.clear();
        Ok(())
    };
    let local_of = |row: u32| rows.binary_search(&row).expect("row belongs to the group") as u32;
    let local: Vec<u32> = group.iter().map(|t| local_of(t.row)).collect();

    disk.scan(c_cm.run(), |t| {
        if t.col != column {
            if column != u32::MAX {
                flush(column, &mut acc, &mut touched)?;
            }
            column = t.col;
        }
        let lo = group.partition_point(|g| g.col < t.row);
        for (g, &l) in group[lo..].iter().zip(&local[lo..]) {
            if g.col != t.row {
                break;
            }
            let slot = &mut acc[l as usize];
            if slot.is_zero() && !touched.contains(&l) {
                touched.push(l);
            }
            *slot = slot.add(g.value.mul(t.value));
        }
        Ok(())
    })?;
    if column != u32::MAX {
        flush(column, &mut acc, &mut touched)?;
    }
    Ok(())
}

/// Estimate, color, then run compressed multiplication on every
/// subproblem.
pub fn monte_carlo_multiply<S, F>(
    disk: &Disk<S>,
    a: &SparseMatrix<S>,
    c: &SparseMatrix<S>,
    sink: &mut EmitSink<F>,
    params: &MonteCarloParams,
    seed: u64,
) -> Result<RunReport, Error>
where
    S: Semiring,
    F: FnMut(Triple<S>) -> Result<(), Error>,
{
    check_dims(a, c)?;
    let start = disk.tally();
    let before = sink.count();
    let z_hat = estimate_total(disk, a, c, &params.estimate, derive_seed(seed, 0))?;
    let cmm = params.coloring.cmm;
    let cmm_seed = derive_seed(seed, 2);
    let mut subproblems = 0usize;
    let mut success = true;
    let mut emit = |t: Triple<S>| sink.emit(t);
    let plan = color(disk, a, c, z_hat, &params.coloring, derive_seed(seed, 1), &mut emit, |sub, emit| {
        let index = subproblems as u64;
        subproblems += 1;
        if sub.a.nnz() == 0 || sub.c.nnz() == 0 {
            return Ok(());
        }
        let mut produced = 0usize;
        cmm_multiply(disk, &sub.a, &sub.c, &cmm, derive_seed(cmm_seed, index), |t| {
            produced += 1;
            emit(t)
        })?;
        if produced as f64 >= sub.bound {
            success = false;
        }
        Ok(())
    })?;
    let mut rep = report(disk, Algorithm::MonteCarlo, a, c, start);
    rep.z_hat = Some(z_hat);
    rep.emitted = sink.count() - before;
    rep.colors = plan.c;
    rep.subproblems = subproblems;
    rep.success = success;
    Ok(rep)
}

/// Runs the algorithm picked by `mode`. `Mode::Auto` first estimates
/// `nnz(AC)` at `eps = 1/4` and asks [`select_algorithm`]; a tie goes to
/// the compressed pipeline.
pub fn multiply<S, F>(
    disk: &Disk<S>,
    a: &SparseMatrix<S>,
    c: &SparseMatrix<S>,
    sink: &mut EmitSink<F>,
    mode: Mode,
    seed: u64,
) -> Result<RunReport, Error>
where
    S: Semiring,
    F: FnMut(Triple<S>) -> Result<(), Error>,
{
    let dim = check_dims(a, c)?;
    let start = disk.tally();
    let n = a.nnz() + c.nnz();
    let memory = disk.config().memory();
    let (algorithm, selection, z_select) = match mode {
        Mode::Naive => (Algorithm::Naive, None, None),
        Mode::Cmm => (Algorithm::MonteCarlo, None, None),
        Mode::Auto => {
            let params = SketchParams::new(0.25, 1.0 / dim.max(1) as f64)?;
            let z = estimate_total(disk, a, c, &params, derive_seed(seed, 3))?;
            let selection = select_algorithm(n, memory, z);
            let algorithm = match selection {
                Selection::Naive => Algorithm::Naive,
                Selection::Cmm | Selection::Either => Algorithm::MonteCarlo,
            };
            (algorithm, Some(selection), Some(z))
        }
    };
    let mut rep = match algorithm {
        Algorithm::Naive => naive_blocked_multiply(disk, a, c, sink)?,
        Algorithm::MonteCarlo => {
            let params = MonteCarloParams::new(memory, dim, n)?;
            monte_carlo_multiply(disk, a, c, sink, &params, seed)?
        }
    };
    rep.selection = selection;
    rep.z_hat = rep.z_hat.or(z_select);
    rep.tally = disk.tally().since(start);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{gen_cancellation_instance, gen_full_cancellation, gen_hard_instance, gen_random};
    use crate::io::IoConfig;
    use crate::matrix::CooMatrix;
    use crate::oracle::oracle_multiply;
    use crate::semiring::{Boolean, IntRing, Tropical};

    type Collected<S> = Vec<Triple<S>>;
    type DynSink<'a, S = IntRing> = EmitSink<&'a mut dyn FnMut(Triple<S>) -> Result<(), Error>>;

    fn run<S: Semiring>(
        disk: &Disk<S>,
        a: &CooMatrix<S>,
        c: &CooMatrix<S>,
        layout: Layout,
        algo: impl Fn(&Disk<S>, &SparseMatrix<S>, &SparseMatrix<S>, &mut DynSink<'_, S>) -> RunReport,
    ) -> (Collected<S>, RunReport) {
        let sa = SparseMatrix::store(disk, a, layout).unwrap();
        let sc = SparseMatrix::store(disk, c, layout).unwrap();
        let mut out = Vec::new();
        let mut push = |t: Triple<S>| {
            out.push(t);
            Ok(())
        };
        let mut sink = EmitSink::with_ledger(&mut push as &mut dyn FnMut(Triple<S>) -> Result<(), Error>);
        let rep = algo(disk, &sa, &sc, &mut sink);
        drop(sink);
        out.sort_by_key(Triple::row_major_key);
        (out, rep)
    }

    fn naive<S: Semiring>(
        disk: &Disk<S>,
        a: &SparseMatrix<S>,
        c: &SparseMatrix<S>,
        sink: &mut DynSink<'_, S>,
    ) -> RunReport {
        naive_blocked_multiply(disk, a, c, sink).unwrap()
    }

    #[test]
    fn ledger_rejects_duplicates() {
        let mut sink = EmitSink::with_ledger(|_t: Triple<IntRing>| Ok(()));
        sink.emit(Triple::new(1, 2, IntRing(3))).unwrap();
        assert_eq!(
            sink.emit(Triple::new(1, 2, IntRing(4))),
            Err(Error::DuplicateEmission { row: 1, col: 2 })
        );
        assert_eq!(sink.count(), 1);
    }

    #[test]
    fn selector_examples() {
        assert_eq!(select_algorithm(1000, 100, 50.0), Selection::Cmm);
        assert_eq!(select_algorithm(100, 100, 9000.0), Selection::Naive);
        assert_eq!(select_algorithm(100, 100, 100.0), Selection::Either);
    }

    #[test]
    fn bounds_in_report() {
        let disk: Disk<IntRing> = Disk::new(IoConfig::new(256, 16).unwrap());
        let a = SparseMatrix::store(&disk, &CooMatrix::identity(8), Layout::RowMajor).unwrap();
        let mut sink = EmitSink::new(|_t: Triple<IntRing>| Ok(()));
        let mut rep = naive_blocked_multiply(&disk, &a, &a, &mut sink).unwrap();
        assert_eq!(rep.emitted, 8);
        assert_eq!(rep.bound_naive(), 256.0 / (256.0 * 16.0));
        assert_eq!(rep.bound_cmm(), 0.0);
        rep.z_hat = Some(64.0);
        assert_eq!(rep.bound_cmm(), 16.0 * 8.0 / (16.0 * 16.0));
    }

    #[test]
    fn naive_identity_cost() {
        let cfg = IoConfig::new(256, 16).unwrap();
        let (budget, _) = naive_limits(256, 16);
        for dim in [8u32, 60, 1000] {
            let disk: Disk<IntRing> = Disk::new(cfg);
            let id = CooMatrix::identity(dim);
            let (out, rep) = run(&disk, &id, &id, Layout::Unsorted, naive);
            assert_eq!(out, id.entries);
            let u = dim as usize;
            // Each pinned row takes its entry plus two words.
            let groups = (3 * u).div_ceil(budget) as u64;
            let limit = 2 * cfg.sort_transfers(u) + (1 + groups) * cfg.blocks_for(u);
            assert!(rep.tally.total() <= limit, "U={dim}: {} > {limit}", rep.tally.total());
            if groups == 1 {
                assert!(rep.tally.total() <= 2 * cfg.sort_transfers(u) + 2 * cfg.blocks_for(u));
            }
        }
    }

    #[test]
    fn naive_empty_costs_one_sort() {
        let cfg = IoConfig::new(256, 16).unwrap();
        let disk: Disk<IntRing> = Disk::new(cfg);
        let empty = CooMatrix::new(50, Vec::new()).unwrap();
        let c = gen_random::<IntRing>(50, 300, 1).unwrap();
        let sa = SparseMatrix::store(&disk, &empty, Layout::RowMajor).unwrap();
        let sc = SparseMatrix::store(&disk, &c, Layout::RowMajor).unwrap();
        let mut sink = EmitSink::new(|_t: Triple<IntRing>| Ok(()));
        let rep = naive_blocked_multiply(&disk, &sa, &sc, &mut sink).unwrap();
        assert_eq!(rep.emitted, 0);
        assert_eq!(rep.tally.total(), cfg.sort_transfers(300));
    }

    #[test]
    fn naive_heavy_row() {
        let dim = 200;
        let mut a = gen_random::<IntRing>(dim, 400, 3).unwrap();
        a.entries.retain(|t| t.row != 17);
        a.entries.extend((0..dim).map(|k| Triple::new(17, k, IntRing(k as i64 % 7 - 3))));
        a.entries.retain(|t| !t.value.is_zero());
        a.sort(Layout::RowMajor);
        let c = gen_random::<IntRing>(dim, 400, 4).unwrap();
        let disk: Disk<IntRing> = Disk::new(IoConfig::new(256, 16).unwrap());
        let (out, _) = run(&disk, &a, &c, Layout::RowMajor, naive);
        assert_eq!(out, oracle_multiply(&a, &c).unwrap().triples);
        assert!(disk.budget().peak() <= 256);
    }

    fn naive_matches<S: crate::generate::SampleValue>(seed: u64) {
        let a = gen_random::<S>(40, 150, seed).unwrap();
        let c = gen_random::<S>(40, 150, seed + 1).unwrap();
        let disk: Disk<S> = Disk::new(IoConfig::new(128, 8).unwrap());
        let (out, rep) = run(&disk, &a, &c, Layout::Unsorted, naive);
        let exact = oracle_multiply(&a, &c).unwrap();
        assert_eq!(out, exact.triples);
        assert_eq!(rep.emitted as usize, exact.z());
        assert!(disk.budget().peak() <= 128);
    }

    #[test]
    fn naive_is_exact_on_every_semiring() {
        for seed in 0..5 {
            naive_matches::<IntRing>(seed);
            naive_matches::<Boolean>(seed);
            naive_matches::<Tropical>(seed);
        }
        let inst = gen_cancellation_instance(64, 32, 9).unwrap();
        let disk: Disk<IntRing> = Disk::new(IoConfig::new(256, 16).unwrap());
        let (out, _) = run(&disk, &inst.a, &inst.c, Layout::RowMajor, naive);
        assert_eq!(out, oracle_multiply(&inst.a, &inst.c).unwrap().triples);
    }

    fn monte_carlo(
        seed: u64,
    ) -> impl Fn(&Disk<IntRing>, &SparseMatrix<IntRing>, &SparseMatrix<IntRing>, &mut DynSink<'_>) -> RunReport {
        move |disk, a, c, sink| {
            let params = MonteCarloParams::new(disk.config().memory(), a.dim(), a.nnz() + c.nnz()).unwrap();
            monte_carlo_multiply(disk, a, c, sink, &params, seed).unwrap()
        }
    }

    #[test]
    fn monte_carlo_full_cancellation_emits_nothing() {
        let inst = gen_full_cancellation(64, 1).unwrap();
        let disk: Disk<IntRing> = Disk::new(IoConfig::new(1 << 12, 64).unwrap());
        let (out, rep) = run(&disk, &inst.a, &inst.c, Layout::RowMajor, monte_carlo(5));
        assert!(out.is_empty());
        assert_eq!(rep.z_hat, Some(0.0));
        assert_eq!(rep.colors, 1);
    }

    #[test]
    fn monte_carlo_hard_instance() {
        let (a, c) = gen_hard_instance::<IntRing>(512, 256, 2).unwrap();
        let exact = oracle_multiply(&a, &c).unwrap();
        let mut wrong = 0;
        for seed in 0..10 {
            let disk: Disk<IntRing> = Disk::new(IoConfig::new(1 << 12, 64).unwrap());
            let (out, rep) = run(&disk, &a, &c, Layout::RowMajor, monte_carlo(seed));
            assert!(rep.colors > 1);
            assert!(disk.budget().peak() <= 1 << 12);
            if out != exact.triples {
                wrong += 1;
            }
        }
        assert!(wrong <= 1, "{wrong} wrong");
    }

    #[test]
    fn tiny_output_is_one_subproblem() {
        let disk: Disk<IntRing> = Disk::new(IoConfig::new(1 << 12, 64).unwrap());
        let a = gen_random::<IntRing>(64, 10, 1).unwrap();
        let c = gen_random::<IntRing>(64, 10, 2).unwrap();
        let (out, rep) = run(&disk, &a, &c, Layout::RowMajor, monte_carlo(1));
        assert_eq!((rep.colors, rep.subproblems), (1, 1));
        assert_eq!(out, oracle_multiply(&a, &c).unwrap().triples);
    }

    #[test]
    fn auto_mode_selects_by_output_size() {
        let memory = 1 << 11;
        // Sparse output: N = 1024, Z = 16, so 2 sqrt(Z M) = 362 < N.
        let (a, c) = gen_hard_instance::<IntRing>(512, 16, 3).unwrap();
        let disk: Disk<IntRing> = Disk::new(IoConfig::new(memory, 16).unwrap());
        let (out, rep) = run(&disk, &a, &c, Layout::RowMajor, |d, a, c, s| multiply(d, a, c, s, Mode::Auto, 7).unwrap());
        assert_eq!(rep.selection, Some(Selection::Cmm));
        assert_eq!(rep.algorithm, Algorithm::MonteCarlo);
        assert_eq!(out, oracle_multiply(&a, &c).unwrap().triples);

        // Dense output: N = 1024 and Z = 4096, so sqrt(Z M) = 2896 > 2 N.
        let (a, c) = gen_hard_instance::<IntRing>(512, 4096, 3).unwrap();
        let disk: Disk<IntRing> = Disk::new(IoConfig::new(memory, 16).unwrap());
        let (out, rep) = run(&disk, &a, &c, Layout::RowMajor, |d, a, c, s| multiply(d, a, c, s, Mode::Auto, 7).unwrap());
        assert_eq!(rep.selection, Some(Selection::Naive));
        assert_eq!(out, oracle_multiply(&a, &c).unwrap().triples);
    }
}
