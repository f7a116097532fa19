//! Linear F0 distinguishers and the threshold-ladder estimator for the
//! number of nonzeros in every column (or row) of a product `AC`.
//!
//! Row `t` of a sketch at threshold `T` keeps index `k` when a 4-wise
//! hash of `k` falls below `p / T`, and weights it by a natural coefficient
//! `c_t(k)` in `[1, p)` applied as repeated addition. For a vector `f` the
//! cell is `sum_k c_t(k) f_k` over the kept indices; a column with `F0`
//! nonzeros gives a nonzero cell with probability `1 - (1 - 1/T)^F0`.
//!
//! All levels of the ladder share hashes and coefficients, so the kept sets
//! are nested.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::constants::{D_CONSTANT, KAPPA};
use crate::dvspmm::{
    dense_times_sparse, multiply_pinned_batch, pinned_batch_capacity, DenseVector, Side, VectorBatch,
};
use crate::error::Error;
use crate::hashing::{derive_seed, FourWiseHash, PairwiseHash, MERSENNE_31};
use crate::io::Run;
use crate::matrix::{Disk, SparseMatrix, Triple};
use crate::semiring::{nat_scale, Semiring};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SketchParams {
    pub eps: f64,
    pub delta: f64,
    /// Multiplier in `d = ceil(d_constant * eps^-2 * ln(U / delta))`.
    pub d_constant: f64,
    /// Offset of the decision threshold, see [`DistinguisherSketch::decide`].
    pub kappa: f64,
}

impl SketchParams {
    pub fn new(eps: f64, delta: f64) -> Result<Self, Error> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParameter("eps must lie in (0, 1]"));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidParameter("delta must lie in (0, 1]"));
        }
        Ok(SketchParams {
            eps,
            delta,
            d_constant: D_CONSTANT,
            kappa: KAPPA,
        })
    }

    pub fn with_d_constant(mut self, d_constant: f64) -> Self {
        self.d_constant = d_constant;
        self
    }

    /// Sketch rows per threshold. Each index gets failure probability
    /// `delta / U` so the guarantee holds for all indices at once.
    pub fn rows(&self, dim: u32) -> usize {
        let per_index = self.delta / dim.max(1) as f64;
        let d = self.d_constant * libm::log(1.0 / per_index) / (self.eps * self.eps);
        (libm::ceil(d) as usize).max(1)
    }

    /// Thresholds `(1 + eps)^m` for `m = 0 ..= ceil(log_{1+eps} U)`.
    pub fn ladder(&self, dim: u32) -> Vec<f64> {
        let top = libm::ceil(libm::log(dim.max(1) as f64) / libm::log1p(self.eps)) as i32;
        (0..=top.max(0)).map(|m| libm::pow(1.0 + self.eps, m as f64)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Above,
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct RowHash {
    select: FourWiseHash,
    coeff: PairwiseHash,
}

fn hash_rows(d: usize, seed: u64) -> Vec<RowHash> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..d)
        .map(|_| RowHash {
            select: FourWiseHash::random(&mut rng),
            coeff: PairwiseHash::random(&mut rng),
        })
        .collect()
}

/// A `d x U` 0/1 projection with random natural weights for threshold `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistinguisherSketch {
    threshold: f64,
    eps: f64,
    kappa: f64,
    cut: u64,
    rows: Vec<RowHash>,
}

impl DistinguisherSketch {
    /// `threshold` may be `f64::INFINITY`, which selects nothing.
    pub fn new(threshold: f64, eps: f64, d: usize, seed: u64) -> Self {
        Self::from_rows(threshold, eps, KAPPA, hash_rows(d, seed))
    }

    fn from_rows(threshold: f64, eps: f64, kappa: f64, rows: Vec<RowHash>) -> Self {
        let rate = if threshold <= 1.0 { 1.0 } else { 1.0 / threshold };
        DistinguisherSketch {
            threshold,
            eps,
            kappa,
            cut: libm::floor(MERSENNE_31 as f64 * rate) as u64,
            rows,
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    #[inline]
    pub fn selects(&self, t: usize, k: u32) -> bool {
        self.rows[t].select.hash(k) < self.cut
    }

    #[inline]
    pub fn coefficient(&self, t: usize, k: u32) -> u64 {
        1 + self.rows[t].coeff.hash(k) % (MERSENNE_31 - 1)
    }

    /// Row `t` of the projection as a dense vector of length `dim`.
    pub fn projection<S: Semiring>(&self, t: usize, dim: u32) -> Vec<S> {
        (0..dim).map(|k| self.weight(t, k)).collect()
    }

    #[inline]
    fn weight<S: Semiring>(&self, t: usize, k: u32) -> S {
        if self.selects(t, k) {
            nat_scale(self.coefficient(t, k), S::one()).expect("coefficients are positive")
        } else {
            S::zero()
        }
    }

    /// The `d` cells of `f` computed directly from the definition.
    pub fn sketch_vector<S: Semiring>(&self, f: &[S]) -> Vec<S> {
        (0..self.rows())
            .map(|t| {
                f.iter().enumerate().fold(S::zero(), |acc, (k, &x)| {
                    if self.selects(t, k as u32) {
                        acc.add(nat_scale(self.coefficient(t, k as u32), x).expect("positive"))
                    } else {
                        acc
                    }
                })
            })
            .collect()
    }

    /// Decides from the number of nonzero cells.
    ///
    /// With selection rate `q = min(1, 1/T)` a vector with exactly `T`
    /// nonzeros leaves a cell zero with probability `(1 - q)^T`. The answer
    /// is `Above` when at least one cell is nonzero and the nonzero fraction
    /// reaches `1 - (1 - q)^T (1 + eps * kappa)`. At `T = 1` this asks for
    /// every cell to be nonzero.
    pub fn decide(&self, nonzero: usize) -> Decision {
        if nonzero == 0 || self.cut == 0 {
            return Decision::Below;
        }
        let q = if self.threshold <= 1.0 { 1.0 } else { 1.0 / self.threshold };
        let empty = libm::pow(1.0 - q, self.threshold);
        let tau = 1.0 - empty * (1.0 + self.eps * self.kappa);
        if nonzero as f64 >= tau * self.rows() as f64 {
            Decision::Above
        } else {
            Decision::Below
        }
    }

    pub fn distinguish<S: Semiring>(&self, cells: &[S]) -> Decision {
        self.decide(cells.iter().filter(|c| !c.is_zero()).count())
    }
}

/// Whose nonzeros are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `nnz([AC]_{*j})` for every column `j`; evaluated as `(F A) C`.
    Columns,
    /// `nnz([AC]_{i*})` for every row `i`; evaluated as `A (C G)`.
    Rows,
}

impl Orientation {
    fn passes<'m, S>(
        self,
        a: &'m SparseMatrix<S>,
        c: &'m SparseMatrix<S>,
    ) -> [(&'m SparseMatrix<S>, Side); 2] {
        match self {
            Orientation::Columns => [(a, Side::Left), (c, Side::Left)],
            Orientation::Rows => [(c, Side::Right), (a, Side::Right)],
        }
    }

    fn tag(self) -> u64 {
        match self {
            Orientation::Columns => 0x636f6c73,
            Orientation::Rows => 0x726f7773,
        }
    }
}

fn check_dims<S: Semiring>(a: &SparseMatrix<S>, c: &SparseMatrix<S>) -> Result<(), Error> {
    if a.dim() != c.dim() {
        return Err(Error::DimensionMismatch(a.dim(), c.dim()));
    }
    if a.dim() as u64 >= MERSENNE_31 {
        return Err(Error::InvalidParameter("dimension must stay below the hash modulus"));
    }
    Ok(())
}

/// Computes the sketch rows `v_t` in batches that fit in free memory and
/// hands each to `visit`. Returns `false` without doing anything when not
/// even one vector fits.
fn pinned_rows<S, F>(
    disk: &Disk<S>,
    sketch: &DistinguisherSketch,
    a: &SparseMatrix<S>,
    c: &SparseMatrix<S>,
    orientation: Orientation,
    mut visit: F,
) -> Result<bool, Error>
where
    S: Semiring,
    F: FnMut(usize, &[S]) -> Result<(), Error>,
{
    let dim = a.dim();
    let width = pinned_batch_capacity(disk, dim);
    if width == 0 {
        return Ok(false);
    }
    let [first, second] = orientation.passes(a, c);
    let d = sketch.rows();
    let mut start = 0;
    while start < d {
        let end = (start + width).min(d);
        let projections = VectorBatch::from_fn(dim, end - start, |v, k| sketch.weight(start + v, k));
        let partial = multiply_pinned_batch(disk, &projections, first.0, first.1)?;
        drop(projections);
        let partial = VectorBatch::from_dense(&partial)?;
        let cells = multiply_pinned_batch(disk, &partial, second.0, second.1)?;
        drop(partial);
        for (offset, v) in cells.iter().enumerate() {
            visit(start + offset, v)?;
        }
        start = end;
    }
    Ok(true)
}

/// Computes one sketch row entirely on disk.
fn external_row<S: Semiring>(
    disk: &Disk<S>,
    sketch: &DistinguisherSketch,
    t: usize,
    a: &SparseMatrix<S>,
    c: &SparseMatrix<S>,
    orientation: Orientation,
) -> Result<Run, Error> {
    let dim = a.dim();
    let [first, second] = orientation.passes(a, c);
    let projection = {
        let mut out = disk.writer()?;
        for k in 0..dim {
            out.push(Triple::new(0, k, sketch.weight(t, k)))?;
        }
        DenseVector::OnDisk {
            dim,
            run: out.finish()?,
        }
    };
    let partial = dense_times_sparse(disk, &projection, first.0, first.1)?;
    projection.release(disk);
    let cells = dense_times_sparse(disk, &partial, second.0, second.1)?;
    partial.release(disk);
    match cells {
        DenseVector::OnDisk { run, .. } => Ok(run),
        DenseVector::Pinned(_) => unreachable!("disk input gives disk output"),
    }
}

/// Number of nonzero cells per index at one threshold.
fn level_counts<S: Semiring>(
    disk: &Disk<S>,
    sketch: &DistinguisherSketch,
    a: &SparseMatrix<S>,
    c: &SparseMatrix<S>,
    orientation: Orientation,
) -> Result<Vec<u32>, Error> {
    let dim = a.dim() as usize;
    if let Ok(_held) = disk.reserve(dim) {
        let mut counts = vec![0u32; dim];
        let done = pinned_rows(disk, sketch, a, c, orientation, |_, v| {
            for (n, x) in counts.iter_mut().zip(v) {
                *n += u32::from(!x.is_zero());
            }
            Ok(())
        })?;
        if done {
            return Ok(counts);
        }
    }

    // Counts live on disk as records `(count, j, zero)`.
    let mut counts = Run::EMPTY;
    for t in 0..sketch.rows() {
        let cells = external_row(disk, sketch, t, a, c, orientation)?;
        let merged = {
            let mut previous = if counts.is_empty() { None } else { Some(disk.reader(counts)?) };
            let mut out = disk.writer()?;
            disk.scan(cells, |cell| {
                let before = match previous.as_mut() {
                    Some(r) => r.next()?.map_or(0, |p| p.row),
                    None => 0,
                };
                let hit = u32::from(!cell.value.is_zero());
                out.push(Triple::new(before + hit, cell.col, S::zero()))
            })?;
            out.finish()?
        };
        disk.release(cells);
        disk.release(counts);
        counts = merged;
    }
    // The per-index result is output of the estimator, like emitted triples.
    let mut result = Vec::with_capacity(dim);
    disk.scan(counts, |r| {
        result.push(r.row);
        Ok(())
    })?;
    disk.release(counts);
    Ok(result)
}

/// The full `d x U` table of one sketch applied to every column (or row)
/// of `AC`. Requires the pinned strategy to fit in memory.
pub fn sketch_product<S: Semiring>(
    disk: &Disk<S>,
    sketch: &DistinguisherSketch,
    a: &SparseMatrix<S>,
    c: &SparseMatrix<S>,
    orientation: Orientation,
) -> Result<Vec<Vec<S>>, Error> {
    check_dims(a, c)?;
    let mut table = vec![Vec::new(); sketch.rows()];
    let done = pinned_rows(disk, sketch, a, c, orientation, |t, v| {
        table[t] = v.to_vec();
        Ok(())
    })?;
    if !done {
        return Err(Error::BudgetExceeded {
            requested: 2 * a.dim() as usize + disk.config().block(),
            in_use: disk.budget().in_use(),
            capacity: disk.budget().capacity(),
        });
    }
    Ok(table)
}

/// Per-index estimates read off the threshold ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct RowEstimates {
    pub z_hat: Vec<f64>,
    pub eps: f64,
    pub delta: f64,
    /// Ladder levels evaluated before every index answered `Below`.
    pub levels_used: usize,
}

impl RowEstimates {
    pub fn total(&self) -> f64 {
        self.z_hat.iter().sum()
    }
}

/// Estimates the number of nonzeros in every column (or row) of `AC`.
///
/// Levels are evaluated in increasing order of `T`. If an index answered
/// `Above` at `a` levels its estimate is `T_{a-1} (1 + eps/2)`, and `0` when
/// it never did. For answers that switch from `Above` to `Below` once, `T_{a-1}`
/// is the largest threshold answering `Above`; counting instead of taking
/// the last `Above` keeps isolated wrong answers from biasing the estimate
/// upwards. Evaluation stops at the first level where no index answers
/// `Above`.
pub fn estimate<S: Semiring>(
    disk: &Disk<S>,
    a: &SparseMatrix<S>,
    c: &SparseMatrix<S>,
    params: &SketchParams,
    orientation: Orientation,
    seed: u64,
) -> Result<RowEstimates, Error> {
    check_dims(a, c)?;
    let dim = a.dim();
    let d = params.rows(dim);
    let rows = hash_rows(d, derive_seed(seed, orientation.tag()));
    let ladder = params.ladder(dim);
    let mut above = vec![0usize; dim as usize];
    let mut levels_used = 0;
    if a.nnz() > 0 && c.nnz() > 0 {
        for (m, &threshold) in ladder.iter().enumerate() {
            levels_used = m + 1;
            let sketch = DistinguisherSketch::from_rows(threshold, params.eps, params.kappa, rows.clone());
            let counts = level_counts(disk, &sketch, a, c, orientation)?;
            let mut any = false;
            for (hits, &n) in above.iter_mut().zip(&counts) {
                if sketch.decide(n as usize) == Decision::Above {
                    *hits += 1;
                    any = true;
                }
            }
            if !any {
                break;
            }
        }
    }
    let scale = 1.0 + params.eps / 2.0;
    Ok(RowEstimates {
        z_hat: above
            .into_iter()
            .map(|a| if a == 0 { 0.0 } else { ladder[a - 1] * scale })
            .collect(),
        eps: params.eps,
        delta: params.delta,
        levels_used,
    })
}

pub fn estimate_columns<S: Semiring>(
    disk: &Disk<S>,
    a: &SparseMatrix<S>,
    c: &SparseMatrix<S>,
    params: &SketchParams,
    seed: u64,
) -> Result<RowEstimates, Error> {
    estimate(disk, a, c, params, Orientation::Columns, seed)
}

pub fn estimate_rows<S: Semiring>(
    disk: &Disk<S>,
    a: &SparseMatrix<S>,
    c: &SparseMatrix<S>,
    params: &SketchParams,
    seed: u64,
) -> Result<RowEstimates, Error> {
    estimate(disk, a, c, params, Orientation::Rows, seed)
}

/// Estimate of `nnz(AC)`: the sum of the column estimates.
pub fn estimate_total<S: Semiring>(
    disk: &Disk<S>,
    a: &SparseMatrix<S>,
    c: &SparseMatrix<S>,
    params: &SketchParams,
    seed: u64,
) -> Result<f64, Error> {
    Ok(estimate_columns(disk, a, c, params, seed)?.total())
}
