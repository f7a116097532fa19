//! Dense vector times sparse matrix in the I/O model.
//!
//! Two evaluation strategies:
//! - pinned: the input vector and an accumulator fit in memory next to a
//!   scan buffer, so one scan of the matrix suffices;
//! - sort-join: the matrix is brought into the order of the vector index,
//!   joined with the vector by a merge scan, and the partial products are
//!   sorted by output index and summed.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::io::Run;
use crate::matrix::{Disk, Layout, SparseMatrix, Triple};
use crate::semiring::Semiring;

/// Which side of the matrix the vector multiplies from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `y * S`: the vector is indexed by rows of `S`, the result by columns.
    Left,
    /// `S * y`: the vector is indexed by columns of `S`, the result by rows.
    Right,
}

impl Side {
    /// Vector index and output index of a matrix entry.
    #[inline]
    fn split<S>(self, t: &Triple<S>) -> (u32, u32) {
        match self {
            Side::Left => (t.row, t.col),
            Side::Right => (t.col, t.row),
        }
    }

    #[inline]
    fn product<S: Semiring>(self, y: S, s: S) -> S {
        match self {
            Side::Left => y.mul(s),
            Side::Right => s.mul(y),
        }
    }

    /// Matrix order that groups entries by vector index.
    fn join_layout(self) -> Layout {
        match self {
            Side::Left => Layout::RowMajor,
            Side::Right => Layout::ColumnMajor,
        }
    }
}

/// A length-`U` vector, either held in memory or stored on disk as `U`
/// records `(0, k, y[k])` in index order.
#[derive(Debug, Clone, PartialEq)]
pub enum DenseVector<S> {
    Pinned(Vec<S>),
    OnDisk { dim: u32, run: Run },
}

impl<S: Semiring> DenseVector<S> {
    pub fn zeros(dim: u32) -> Self {
        DenseVector::Pinned(vec![S::zero(); dim as usize])
    }

    pub fn unit(dim: u32, k: u32) -> Self {
        let mut v = vec![S::zero(); dim as usize];
        v[k as usize] = S::one();
        DenseVector::Pinned(v)
    }

    pub fn dim(&self) -> u32 {
        match self {
            DenseVector::Pinned(v) => v.len() as u32,
            DenseVector::OnDisk { dim, .. } => *dim,
        }
    }

    /// Writes the vector out: `ceil(U/B)` writes.
    pub fn spill(&self, disk: &Disk<S>) -> Result<Self, Error> {
        match self {
            DenseVector::Pinned(v) => {
                let run = disk.write_run(
                    v.iter()
                        .enumerate()
                        .map(|(k, &x)| Triple::new(0, k as u32, x)),
                )?;
                Ok(DenseVector::OnDisk {
                    dim: v.len() as u32,
                    run,
                })
            }
            DenseVector::OnDisk { .. } => Ok(self.clone()),
        }
    }

    /// Brings the vector into memory: `ceil(U/B)` reads when on disk.
    /// The caller accounts for the `U` words it occupies afterwards.
    pub fn fetch(&self, disk: &Disk<S>) -> Result<Vec<S>, Error> {
        match self {
            DenseVector::Pinned(v) => Ok(v.clone()),
            DenseVector::OnDisk { dim, run } => {
                let mut v = Vec::with_capacity(*dim as usize);
                disk.scan(*run, |t| {
                    v.push(t.value);
                    Ok(())
                })?;
                Ok(v)
            }
        }
    }

    /// Uncharged copy for tests and verification.
    pub fn to_vec(&self, disk: &Disk<S>) -> Result<Vec<S>, Error> {
        match self {
            DenseVector::Pinned(v) => Ok(v.clone()),
            DenseVector::OnDisk { run, .. } => {
                Ok(disk.peek(*run)?.into_iter().map(|t| t.value).collect())
            }
        }
    }

    pub fn release(self, disk: &Disk<S>) {
        if let DenseVector::OnDisk { run, .. } = self {
            disk.release(run);
        }
    }
}

/// How many vectors of length `dim` fit into free memory together with
/// their accumulators and one scan buffer.
pub fn pinned_batch_capacity<S: Semiring>(disk: &Disk<S>, dim: u32) -> usize {
    let free = disk.budget().available();
    let b = disk.config().block();
    free.saturating_sub(b) / (2 * dim.max(1) as usize)
}

/// A batch of length-`U` vectors stored index-major: for every index `k`,
/// the nonzero entries `(vector, value)` of all vectors at `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorBatch<S> {
    dim: u32,
    width: usize,
    offsets: Vec<usize>,
    items: Vec<(u32, S)>,
}

impl<S: Semiring> VectorBatch<S> {
    /// Builds a batch of `width` vectors with entries `value(v, k)`.
    pub fn from_fn<F>(dim: u32, width: usize, mut value: F) -> Self
    where
        F: FnMut(usize, u32) -> S,
    {
        let mut offsets = Vec::with_capacity(dim as usize + 1);
        let mut items = Vec::new();
        offsets.push(0);
        for k in 0..dim {
            for v in 0..width {
                let x = value(v, k);
                if !x.is_zero() {
                    items.push((v as u32, x));
                }
            }
            offsets.push(items.len());
        }
        VectorBatch {
            dim,
            width,
            offsets,
            items,
        }
    }

    pub fn from_dense(ys: &[Vec<S>]) -> Result<Self, Error> {
        let dim = ys.first().map_or(0, |y| y.len());
        if let Some(y) = ys.iter().find(|y| y.len() != dim) {
            return Err(Error::DimensionMismatch(y.len() as u32, dim as u32));
        }
        Ok(Self::from_fn(dim as u32, ys.len(), |v, k| ys[v][k as usize]))
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    fn at(&self, k: u32) -> &[(u32, S)] {
        &self.items[self.offsets[k as usize]..self.offsets[k as usize + 1]]
    }
}

/// Multiplies every vector of `batch` with `s` during a single scan of `s`.
///
/// Needs `2 * width * U + B` free words: the batch and its accumulators.
/// Returns the products in memory.
pub fn multiply_pinned_batch<S: Semiring>(
    disk: &Disk<S>,
    batch: &VectorBatch<S>,
    s: &SparseMatrix<S>,
    side: Side,
) -> Result<Vec<Vec<S>>, Error> {
    if batch.dim() != s.dim() {
        return Err(Error::DimensionMismatch(batch.dim(), s.dim()));
    }
    let dim = s.dim() as usize;
    let _memory = disk.reserve(2 * batch.width() * dim)?;
    let mut acc = vec![vec![S::zero(); dim]; batch.width()];
    disk.scan(s.run(), |t| {
        let (k, j) = side.split(t);
        for &(v, x) in batch.at(k) {
            let slot = &mut acc[v as usize][j as usize];
            *slot = slot.add(side.product(x, t.value));
        }
        Ok(())
    })?;
    Ok(acc)
}

/// Computes `y * S` (or `S * y`).
///
/// The result lives where `y` lives: a pinned input gives a pinned result,
/// an input on disk gives a result on disk. Falls back to the sort-join
/// when the pinned strategy does not fit in free memory.
pub fn dense_times_sparse<S: Semiring>(
    disk: &Disk<S>,
    y: &DenseVector<S>,
    s: &SparseMatrix<S>,
    side: Side,
) -> Result<DenseVector<S>, Error> {
    if y.dim() != s.dim() {
        return Err(Error::DimensionMismatch(y.dim(), s.dim()));
    }
    if pinned_batch_capacity(disk, s.dim()) >= 1 {
        let batch = VectorBatch::from_dense(core::slice::from_ref(&y.fetch(disk)?))?;
        let out = multiply_pinned_batch(disk, &batch, s, side)?
            .pop()
            .expect("one result per input");
        let out = DenseVector::Pinned(out);
        return match y {
            DenseVector::Pinned(_) => Ok(out),
            DenseVector::OnDisk { .. } => out.spill(disk),
        };
    }
    match y {
        DenseVector::OnDisk { run, .. } => sort_join(disk, *run, s, side),
        DenseVector::Pinned(_) => {
            let stored = y.spill(disk)?;
            let result = dense_times_sparse(disk, &stored, s, side)?;
            let values = result.to_vec(disk)?;
            result.release(disk);
            stored.release(disk);
            Ok(DenseVector::Pinned(values))
        }
    }
}

/// Sort-join evaluation for a vector stored on disk. Holds at most three
/// blocks of memory outside the sorts.
fn sort_join<S: Semiring>(
    disk: &Disk<S>,
    y: Run,
    s: &SparseMatrix<S>,
    side: Side,
) -> Result<DenseVector<S>, Error> {
    let dim = s.dim();
    let (ordered, fresh) = s.ensure_layout(disk, side.join_layout())?;

    // Partial products, keyed by output index in the column field.
    let partials = {
        let mut vector = disk.reader(y)?;
        let mut out = disk.writer()?;
        let mut current: Option<Triple<S>> = None;
        disk.scan(ordered.run(), |t| {
            let (k, j) = side.split(t);
            while current.is_none_or(|c| c.col < k) {
                current = vector.next()?;
                if current.is_none() {
                    return Err(Error::InvalidShape("vector shorter than matrix dimension"));
                }
            }
            let x = current.expect("vector entry").value;
            if !x.is_zero() {
                let p = side.product(x, t.value);
                if !p.is_zero() {
                    out.push(Triple::new(0, j, p))?;
                }
            }
            Ok(())
        })?;
        out.finish()?
    };
    if fresh {
        ordered.release(disk);
    }

    let sorted = disk.external_sort(partials, |t| t.col)?;
    disk.release(partials);

    let result = {
        let mut out = disk.writer()?;
        let mut next = 0u32;
        let mut pending: Option<Triple<S>> = None;
        disk.scan(sorted, |t| {
            match &mut pending {
                Some(p) if p.col == t.col => p.value = p.value.add(t.value),
                _ => {
                    if let Some(p) = pending.take() {
                        while next < p.col {
                            out.push(Triple::new(0, next, S::zero()))?;
                            next += 1;
                        }
                        out.push(p)?;
                        next += 1;
                    }
                    pending = Some(*t);
                }
            }
            Ok(())
        })?;
        if let Some(p) = pending {
            while next < p.col {
                out.push(Triple::new(0, next, S::zero()))?;
                next += 1;
            }
            out.push(p)?;
            next += 1;
        }
        while next < dim {
            out.push(Triple::new(0, next, S::zero()))?;
            next += 1;
        }
        out.finish()?
    };
    disk.release(sorted);
    Ok(DenseVector::OnDisk { dim, run: result })
}

/// Computes the sparse row `i` of `A` (given as `(k, value)` pairs) times
/// `C` and emits `(i, j, v)` for every nonzero `v`, in increasing `j`.
pub fn row_times_matrix_emit<S, F>(
    disk: &Disk<S>,
    i: u32,
    row: &[(u32, S)],
    c: &SparseMatrix<S>,
    mut emit: F,
) -> Result<(), Error>
where
    S: Semiring,
    F: FnMut(Triple<S>) -> Result<(), Error>,
{
    let line = Line::Memory(row);
    vector_emit(disk, line, c, Side::Left, |j, v| emit(Triple::new(i, j, v)))
}

/// Computes `A` times the sparse column `j` of `C` (given as `(k, value)`
/// pairs) and emits `(i, j, v)` for every nonzero `v`, in increasing `i`.
pub fn matrix_times_column_emit<S, F>(
    disk: &Disk<S>,
    a: &SparseMatrix<S>,
    j: u32,
    column: &[(u32, S)],
    mut emit: F,
) -> Result<(), Error>
where
    S: Semiring,
    F: FnMut(Triple<S>) -> Result<(), Error>,
{
    let line = Line::Memory(column);
    vector_emit(disk, line, a, Side::Right, |i, v| emit(Triple::new(i, j, v)))
}

/// Like [`row_times_matrix_emit`] for a row too long to hold: `row` is a
/// matrix whose entries all lie in row `i`.
pub fn stored_row_times_matrix_emit<S, F>(
    disk: &Disk<S>,
    i: u32,
    row: &SparseMatrix<S>,
    c: &SparseMatrix<S>,
    mut emit: F,
) -> Result<(), Error>
where
    S: Semiring,
    F: FnMut(Triple<S>) -> Result<(), Error>,
{
    let line = Line::Stored(row.run(), |t| t.col);
    vector_emit(disk, line, c, Side::Left, |j, v| emit(Triple::new(i, j, v)))
}

/// Like [`matrix_times_column_emit`] for a stored column: `column` is a
/// matrix whose entries all lie in column `j`.
pub fn matrix_times_stored_column_emit<S, F>(
    disk: &Disk<S>,
    a: &SparseMatrix<S>,
    j: u32,
    column: &SparseMatrix<S>,
    mut emit: F,
) -> Result<(), Error>
where
    S: Semiring,
    F: FnMut(Triple<S>) -> Result<(), Error>,
{
    let line = Line::Stored(column.run(), |t| t.row);
    vector_emit(disk, line, a, Side::Right, |i, v| emit(Triple::new(i, j, v)))
}

/// A sparse vector, either in memory or as a run of triples with the
/// vector index picked out by a field accessor.
enum Line<'a, S> {
    Memory(&'a [(u32, S)]),
    Stored(Run, fn(&Triple<S>) -> u32),
}

fn vector_emit<S, F>(
    disk: &Disk<S>,
    line: Line<'_, S>,
    m: &SparseMatrix<S>,
    side: Side,
    mut emit: F,
) -> Result<(), Error>
where
    S: Semiring,
    F: FnMut(u32, S) -> Result<(), Error>,
{
    let dim = m.dim();
    let out_of_range = |k: u32| Error::IndexOutOfRange { row: k, col: k, dim };
    match &line {
        Line::Memory(entries) => {
            if entries.is_empty() {
                return Ok(());
            }
            if let Some(&(k, _)) = entries.iter().find(|(k, _)| *k >= dim) {
                return Err(out_of_range(k));
            }
        }
        Line::Stored(run, _) => {
            if run.is_empty() {
                return Ok(());
            }
        }
    }

    if pinned_batch_capacity(disk, dim) >= 1 {
        let dense = {
            let _slot = disk.reserve(dim as usize)?;
            let mut dense = vec![S::zero(); dim as usize];
            match &line {
                Line::Memory(entries) => {
                    for &(k, v) in *entries {
                        dense[k as usize] = v;
                    }
                }
                Line::Stored(run, index) => disk.scan(*run, |t| {
                    let k = index(t);
                    if k >= dim {
                        return Err(out_of_range(k));
                    }
                    dense[k as usize] = t.value;
                    Ok(())
                })?,
            }
            dense
        };
        let batch = VectorBatch::from_dense(core::slice::from_ref(&dense))?;
        drop(dense);
        let values = multiply_pinned_batch(disk, &batch, m, side)?
            .pop()
            .expect("one result per input");
        for (j, v) in values.into_iter().enumerate() {
            if !v.is_zero() {
                emit(j as u32, v)?;
            }
        }
        return Ok(());
    }

    // Too little memory to pin: write the vector densely and sort-join.
    let stored = match line {
        Line::Memory(entries) => {
            let mut sorted = entries.to_vec();
            sorted.sort_unstable_by_key(|&(k, _)| k);
            write_dense(disk, dim, sorted.into_iter())?
        }
        Line::Stored(run, index) => {
            let sorted = disk.external_sort(run, index)?;
            let dense = {
                let mut reader = disk.reader(sorted)?;
                let mut pairs = core::iter::from_fn(|| match reader.next() {
                    Ok(t) => t.map(|t| Ok((index(&t), t.value))),
                    Err(e) => Some(Err(e)),
                });
                write_dense_fallible(disk, dim, &mut pairs)?
            };
            disk.release(sorted);
            dense
        }
    };
    let product = sort_join(disk, stored, m, side)?;
    disk.release(stored);
    let DenseVector::OnDisk { run, .. } = product else {
        unreachable!("sort-join writes its result");
    };
    disk.scan(run, |t| if t.value.is_zero() { Ok(()) } else { emit(t.col, t.value) })?;
    disk.release(run);
    Ok(())
}

fn write_dense<S: Semiring>(
    disk: &Disk<S>,
    dim: u32,
    sorted: impl Iterator<Item = (u32, S)>,
) -> Result<Run, Error> {
    write_dense_fallible(disk, dim, &mut sorted.map(Ok))
}

/// Writes `U` records `(0, k, y[k])` from the nonzeros of `y` in index order.
fn write_dense_fallible<S: Semiring>(
    disk: &Disk<S>,
    dim: u32,
    sorted: &mut dyn Iterator<Item = Result<(u32, S), Error>>,
) -> Result<Run, Error> {
    let mut out = disk.writer()?;
    let mut next = 0u32;
    for pair in sorted {
        let (k, v) = pair?;
        if k >= dim {
            return Err(Error::IndexOutOfRange { row: k, col: k, dim });
        }
        while next < k {
            out.push(Triple::new(0, next, S::zero()))?;
            next += 1;
        }
        out.push(Triple::new(0, k, v))?;
        next = k + 1;
    }
    while next < dim {
        out.push(Triple::new(0, next, S::zero()))?;
        next += 1;
    }
    out.finish()
}
