//! Sparse matrices as runs of triples on the simulated disk.

use alloc::vec;
use alloc::vec::Vec;
use core::marker::PhantomData;

use crate::error::Error;
use crate::io::{Run, SimDisk};
use crate::semiring::Semiring;

/// One nonzero entry. Indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triple<S> {
    pub row: u32,
    pub col: u32,
    pub value: S,
}

impl<S> Triple<S> {
    #[inline]
    pub fn new(row: u32, col: u32, value: S) -> Self {
        Triple { row, col, value }
    }

    #[inline]
    pub fn row_major_key(&self) -> (u32, u32) {
        (self.row, self.col)
    }

    #[inline]
    pub fn col_major_key(&self) -> (u32, u32) {
        (self.col, self.row)
    }
}

pub type Disk<S> = SimDisk<Triple<S>>;

/// `max(1, ceil(log2 U))`: the `log U` of all size bounds.
pub fn log2_dim(dim: u32) -> u32 {
    if dim <= 2 {
        1
    } else {
        u32::BITS - (dim - 1).leading_zeros()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Lexicographic `(row, col)` order.
    RowMajor,
    /// Lexicographic `(col, row)` order.
    ColumnMajor,
    Unsorted,
}

impl Layout {
    /// The most specific truthful tag for `entries`.
    pub fn detect<S>(entries: &[Triple<S>]) -> Layout {
        if entries
            .windows(2)
            .all(|w| w[0].row_major_key() < w[1].row_major_key())
        {
            Layout::RowMajor
        } else if entries
            .windows(2)
            .all(|w| w[0].col_major_key() < w[1].col_major_key())
        {
            Layout::ColumnMajor
        } else {
            Layout::Unsorted
        }
    }

    fn holds_for<S>(self, entries: &[Triple<S>]) -> bool {
        match self {
            Layout::RowMajor => entries
                .windows(2)
                .all(|w| w[0].row_major_key() < w[1].row_major_key()),
            Layout::ColumnMajor => entries
                .windows(2)
                .all(|w| w[0].col_major_key() < w[1].col_major_key()),
            Layout::Unsorted => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Cols,
}

/// A square sparse matrix held in main memory (files, generators, oracle).
#[derive(Debug, Clone, PartialEq)]
pub struct CooMatrix<S> {
    pub dim: u32,
    pub entries: Vec<Triple<S>>,
}

impl<S: Semiring> CooMatrix<S> {
    pub fn new(dim: u32, entries: Vec<Triple<S>>) -> Result<Self, Error> {
        let m = CooMatrix { dim, entries };
        m.validate()?;
        Ok(m)
    }

    pub fn identity(dim: u32) -> Self {
        CooMatrix {
            dim,
            entries: (0..dim).map(|i| Triple::new(i, i, S::one())).collect(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Checks range, nonzero values and absence of duplicate positions.
    pub fn validate(&self) -> Result<(), Error> {
        for t in &self.entries {
            if t.row >= self.dim || t.col >= self.dim {
                return Err(Error::IndexOutOfRange {
                    row: t.row,
                    col: t.col,
                    dim: self.dim,
                });
            }
            if t.value.is_zero() {
                return Err(Error::ZeroEntry {
                    row: t.row,
                    col: t.col,
                });
            }
        }
        let mut keys: Vec<(u32, u32)> = self.entries.iter().map(Triple::row_major_key).collect();
        keys.sort_unstable();
        if let Some(w) = keys.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateEntry {
                row: w[0].0,
                col: w[0].1,
            });
        }
        Ok(())
    }

    pub fn sort(&mut self, layout: Layout) {
        match layout {
            Layout::RowMajor => self.entries.sort_by_key(Triple::row_major_key),
            Layout::ColumnMajor => self.entries.sort_by_key(Triple::col_major_key),
            Layout::Unsorted => {}
        }
    }

    pub fn transposed(&self) -> Self {
        CooMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|t| Triple::new(t.col, t.row, t.value))
                .collect(),
        }
    }
}

/// A set of indices in `[0, dim)`, stored as a bitmap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    dim: u32,
    bits: Vec<u64>,
}

impl IndexSet {
    pub fn empty(dim: u32) -> Self {
        IndexSet {
            dim,
            bits: vec![0; (dim as usize).div_ceil(64)],
        }
    }

    pub fn full(dim: u32) -> Self {
        let mut s = Self::empty(dim);
        for i in 0..dim {
            s.insert(i);
        }
        s
    }

    pub fn from_indices(dim: u32, indices: impl IntoIterator<Item = u32>) -> Self {
        let mut s = Self::empty(dim);
        for i in indices {
            s.insert(i);
        }
        s
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    #[inline]
    pub fn insert(&mut self, i: u32) {
        debug_assert!(i < self.dim);
        self.bits[(i / 64) as usize] |= 1 << (i % 64);
    }

    #[inline]
    pub fn contains(&self, i: u32) -> bool {
        i < self.dim && self.bits[(i / 64) as usize] & (1 << (i % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|w| *w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.dim).filter(move |i| self.contains(*i))
    }

    /// Internal-memory footprint in words.
    pub fn words(&self) -> usize {
        self.bits.len()
    }
}

/// A square sparse matrix whose triples live on a [`SimDisk`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SparseMatrix<S> {
    dim: u32,
    layout: Layout,
    run: Run,
    _values: PhantomData<S>,
}

impl<S: Semiring> SparseMatrix<S> {
    /// Writes `m` to disk, charging one write per block.
    ///
    /// `layout` must describe the order of `m.entries`; pass
    /// [`Layout::Unsorted`] when unsure.
    pub fn store(disk: &Disk<S>, m: &CooMatrix<S>, layout: Layout) -> Result<Self, Error> {
        if !layout.holds_for(&m.entries) {
            return Err(Error::LayoutMismatch {
                expected: layout,
                found: Layout::detect(&m.entries),
            });
        }
        let run = disk.write_run(m.entries.iter().copied())?;
        Ok(SparseMatrix::from_run(m.dim, layout, run))
    }

    /// Wraps a run the caller knows to be a valid matrix in `layout`.
    pub fn from_run(dim: u32, layout: Layout, run: Run) -> Self {
        SparseMatrix {
            dim,
            layout,
            run,
            _values: PhantomData,
        }
    }

    /// An empty matrix; occupies no blocks.
    pub fn empty(dim: u32, layout: Layout) -> Self {
        Self::from_run(dim, layout, Run::EMPTY)
    }

    #[inline]
    pub fn dim(&self) -> u32 {
        self.dim
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.run.len()
    }

    #[inline]
    pub fn layout(&self) -> Layout {
        self.layout
    }

    #[inline]
    pub fn run(&self) -> Run {
        self.run
    }

    /// Uncharged copy for verification and file output.
    pub fn load(&self, disk: &Disk<S>) -> Result<CooMatrix<S>, Error> {
        Ok(CooMatrix {
            dim: self.dim,
            entries: disk.peek(self.run)?,
        })
    }

    pub fn release(self, disk: &Disk<S>) {
        disk.release(self.run);
    }

    /// Re-sorts into `target` with one external sort, even if already there.
    pub fn sort_to_layout(&self, disk: &Disk<S>, target: Layout) -> Result<Self, Error> {
        let run = match target {
            Layout::RowMajor => disk.external_sort(self.run, Triple::row_major_key)?,
            Layout::ColumnMajor => disk.external_sort(self.run, Triple::col_major_key)?,
            Layout::Unsorted => {
                return Ok(*self);
            }
        };
        Ok(Self::from_run(self.dim, target, run))
    }

    /// Like [`sort_to_layout`](Self::sort_to_layout) but free when the
    /// layout tag already matches. Returns whether a new run was written.
    pub fn ensure_layout(&self, disk: &Disk<S>, target: Layout) -> Result<(Self, bool), Error> {
        if self.layout == target || self.nnz() == 0 {
            Ok((Self::from_run(self.dim, target, self.run), false))
        } else {
            Ok((self.sort_to_layout(disk, target)?, true))
        }
    }

    /// Keeps the triples whose `axis` index is in `keep`: one scan plus one
    /// write pass. Preserves the layout.
    pub fn restrict(&self, disk: &Disk<S>, keep: &IndexSet, axis: Axis) -> Result<Self, Error> {
        let _set = disk.reserve(keep.words())?;
        let mut out = disk.writer()?;
        disk.scan(self.run, |t| {
            let idx = match axis {
                Axis::Rows => t.row,
                Axis::Cols => t.col,
            };
            if keep.contains(idx) {
                out.push(*t)?;
            }
            Ok(())
        })?;
        Ok(Self::from_run(self.dim, self.layout, out.finish()?))
    }

    /// Swaps row and column of every triple: one scan plus one write pass.
    pub fn transpose(&self, disk: &Disk<S>) -> Result<Self, Error> {
        let mut out = disk.writer()?;
        disk.scan(self.run, |t| out.push(Triple::new(t.col, t.row, t.value)))?;
        let layout = match self.layout {
            Layout::RowMajor => Layout::ColumnMajor,
            Layout::ColumnMajor => Layout::RowMajor,
            Layout::Unsorted => Layout::Unsorted,
        };
        Ok(Self::from_run(self.dim, layout, out.finish()?))
    }

    /// Indices that carry at least one nonzero along `axis`: one scan.
    pub fn support(&self, disk: &Disk<S>, axis: Axis) -> Result<IndexSet, Error> {
        let mut set = IndexSet::empty(self.dim);
        disk.scan(self.run, |t| {
            set.insert(match axis {
                Axis::Rows => t.row,
                Axis::Cols => t.col,
            });
            Ok(())
        })?;
        Ok(set)
    }
}
