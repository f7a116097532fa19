//! Balanced coloring: splits the rows of `A`, then per row group the
//! columns of `C`, so that every pair of groups has a small product.
//! Rows and columns that would unbalance a split are multiplied out
//! directly and removed.

use alloc::vec;
use alloc::vec::Vec;

use crate::cmm::CmmParams;
use crate::constants::COLORING_D_CONSTANT;
use crate::dvspmm::{matrix_times_stored_column_emit, stored_row_times_matrix_emit};
use crate::error::Error;
use crate::hashing::derive_seed;
use crate::matrix::{log2_dim, Axis, Disk, IndexSet, Layout, SparseMatrix, Triple};
use crate::semiring::Semiring;
use crate::sketch::{estimate_columns, estimate_rows, SketchParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColoringParams {
    pub cmm: CmmParams,
    /// Estimator settings for the per-row and per-column counts.
    pub sketch: SketchParams,
    /// Column groups aim for `fill * bound` output entries.
    pub fill: f64,
}

impl ColoringParams {
    /// `eps = 1 / log U` and `delta = 1 / U`.
    pub fn new(cmm: CmmParams, dim: u32) -> Result<Self, Error> {
        let eps = 1.0 / log2_dim(dim) as f64;
        let sketch = SketchParams::new(eps, 1.0 / dim.max(1) as f64)?.with_d_constant(COLORING_D_CONSTANT);
        Ok(ColoringParams { cmm, sketch, fill: 0.5 })
    }

    pub fn with_sketch(mut self, sketch: SketchParams) -> Self {
        self.sketch = sketch;
        self
    }
}

/// `max(1, ceil(sqrt(z_hat log U / (gamma M))))`.
pub fn choose_color_count(z_hat: f64, memory: usize, dim: u32, gamma: f64) -> u32 {
    let ratio = z_hat.max(0.0) * log2_dim(dim) as f64 / (gamma * memory as f64);
    (libm::ceil(libm::sqrt(ratio)) as u32).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Color {
    Group(u32),
    Removed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorPlan {
    pub c: u32,
    pub row_color: Vec<Color>,
    /// Column colors for each row group.
    pub col_color: Vec<Vec<Color>>,
    pub removed_rows: Vec<u32>,
    /// Removed columns for each row group.
    pub removed_cols: Vec<Vec<u32>>,
}

impl ColorPlan {
    pub fn row_groups(&self) -> usize {
        self.col_color.len()
    }
}

/// `A` restricted to row group `row_group` (column-major) and `C`
/// restricted to column group `col_group` of it (row-major).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subproblem<S> {
    pub a: SparseMatrix<S>,
    pub c: SparseMatrix<S>,
    pub bound: f64,
    pub row_group: u32,
    pub col_group: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Split {
    pub first: Vec<u32>,
    pub second: Vec<u32>,
    pub removed: Option<u32>,
}

/// Splits `scope` greedily: indices join the first part while its
/// estimated total stays below half of the scope total, the index that
/// would cross is removed and the rest form the second part. Scopes of at
/// most two indices become singletons.
pub fn split_once(scope: &[u32], estimates: &[f64]) -> Split {
    if scope.len() <= 2 {
        return Split {
            first: scope.iter().take(1).copied().collect(),
            second: scope.iter().skip(1).copied().collect(),
            removed: None,
        };
    }
    let half = scope.iter().map(|&k| estimates[k as usize]).sum::<f64>() / 2.0;
    let mut split = Split::default();
    let mut acc = 0.0;
    for &k in scope {
        let est = estimates[k as usize];
        if split.removed.is_some() {
            split.second.push(k);
        } else if acc + est < half {
            acc += est;
            split.first.push(k);
        } else {
            split.removed = Some(k);
        }
    }
    split
}

/// Recursively splits `scope` until every part is estimated at or below
/// `target` or `depth` levels are used. A lone index above `target` is
/// removed.
fn partition(scope: Vec<u32>, estimates: &[f64], target: f64, depth: u32) -> (Vec<Vec<u32>>, Vec<u32>) {
    let mut groups = Vec::new();
    let mut removed = Vec::new();
    let mut stack = vec![(scope, 0u32)];
    while let Some((scope, level)) = stack.pop() {
        let total: f64 = scope.iter().map(|&k| estimates[k as usize]).sum();
        if total <= target || level >= depth {
            groups.push(scope);
            continue;
        }
        if let [k] = scope[..] {
            removed.push(k);
            continue;
        }
        let split = split_once(&scope, estimates);
        removed.extend(split.removed);
        // Second part first so the first part is popped first.
        for part in [split.second, split.first] {
            if !part.is_empty() {
                stack.push((part, level + 1));
            }
        }
    }
    groups.retain(|g| !g.is_empty());
    removed.sort_unstable();
    (groups, removed)
}

fn depth_cap(c: u32) -> u32 {
    u32::BITS - (c.max(1) - 1).leading_zeros() + 2
}

fn assign(dim: u32, groups: &[Vec<u32>], removed: &[u32]) -> Vec<Color> {
    let mut colors = vec![Color::Removed; dim as usize];
    for (g, group) in groups.iter().enumerate() {
        for &k in group {
            colors[k as usize] = Color::Group(g as u32);
        }
    }
    debug_assert!(removed.iter().all(|&k| colors[k as usize] == Color::Removed));
    colors
}

/// Colors `A` and `C` for an estimated output size `z_hat`, emitting the
/// products of removed rows and columns through `emit` and handing every
/// subproblem to `on_subproblem` in order. Subproblem runs are released
/// once the callback returns.
#[allow(clippy::too_many_arguments)]
pub fn color<S, E, F>(
    disk: &Disk<S>,
    a: &SparseMatrix<S>,
    c: &SparseMatrix<S>,
    z_hat: f64,
    params: &ColoringParams,
    seed: u64,
    emit: &mut E,
    mut on_subproblem: F,
) -> Result<ColorPlan, Error>
where
    S: Semiring,
    E: FnMut(Triple<S>) -> Result<(), Error>,
    F: FnMut(&Subproblem<S>, &mut E) -> Result<(), Error>,
{
    if a.dim() != c.dim() {
        return Err(Error::DimensionMismatch(a.dim(), c.dim()));
    }
    let dim = a.dim();
    let memory = disk.config().memory();
    let colors = choose_color_count(z_hat, memory, dim, params.cmm.gamma);
    let bound = params.cmm.output_bound();
    let depth = depth_cap(colors);

    let (a_cm, a_sorted) = a.ensure_layout(disk, Layout::ColumnMajor)?;
    let (c_rm, c_sorted) = c.ensure_layout(disk, Layout::RowMajor)?;
    let result = (|| {
        if colors == 1 {
            let sub = Subproblem { a: a_cm, c: c_rm, bound, row_group: 0, col_group: 0 };
            on_subproblem(&sub, emit)?;
            return Ok(ColorPlan {
                c: 1,
                row_color: vec![Color::Group(0); dim as usize],
                col_color: vec![vec![Color::Group(0); dim as usize]],
                removed_rows: Vec::new(),
                removed_cols: vec![Vec::new()],
            });
        }

        let rows = estimate_rows(disk, &a_cm, &c_rm, &params.sketch, derive_seed(seed, 0))?;
        let (row_groups, removed_rows) = partition((0..dim).collect(), &rows.z_hat, z_hat / colors as f64, depth);
        drop(rows);

        for &r in &removed_rows {
            let row = a_cm.restrict(disk, &IndexSet::from_indices(dim, [r]), Axis::Rows)?;
            let done = stored_row_times_matrix_emit(disk, r, &row, &c_rm, &mut *emit);
            row.release(disk);
            done?;
        }

        let mut plan = ColorPlan {
            c: colors,
            row_color: assign(dim, &row_groups, &removed_rows),
            col_color: Vec::with_capacity(row_groups.len()),
            removed_rows,
            removed_cols: Vec::with_capacity(row_groups.len()),
        };
        for (i, group) in row_groups.iter().enumerate() {
            let a_i = a_cm.restrict(disk, &IndexSet::from_indices(dim, group.iter().copied()), Axis::Rows)?;
            let done = color_columns(disk, &a_i, &c_rm, i as u32, params, seed, bound, depth, emit, &mut on_subproblem);
            a_i.release(disk);
            let (cols, removed) = done?;
            plan.col_color.push(cols);
            plan.removed_cols.push(removed);
        }
        Ok(plan)
    })();
    if a_sorted {
        a_cm.release(disk);
    }
    if c_sorted {
        c_rm.release(disk);
    }
    result
}

#[allow(clippy::too_many_arguments)]
fn color_columns<S, E, F>(
    disk: &Disk<S>,
    a_i: &SparseMatrix<S>,
    c_rm: &SparseMatrix<S>,
    group: u32,
    params: &ColoringParams,
    seed: u64,
    bound: f64,
    depth: u32,
    emit: &mut E,
    on_subproblem: &mut F,
) -> Result<(Vec<Color>, Vec<u32>), Error>
where
    S: Semiring,
    E: FnMut(Triple<S>) -> Result<(), Error>,
    F: FnMut(&Subproblem<S>, &mut E) -> Result<(), Error>,
{
    let dim = a_i.dim();
    // Only rows of C met by a column of A_i contribute.
    let inner = a_i.support(disk, Axis::Cols)?;
    let c_i = c_rm.restrict(disk, &inner, Axis::Rows)?;
    drop(inner);

    let result = (|| {
        let cols = estimate_columns(disk, a_i, &c_i, &params.sketch, derive_seed(seed, 1 + group as u64))?;
        let (col_groups, removed) = partition((0..dim).collect(), &cols.z_hat, params.fill * bound, depth);
        drop(cols);

        for &j in &removed {
            let column = c_i.restrict(disk, &IndexSet::from_indices(dim, [j]), Axis::Cols)?;
            let done = matrix_times_stored_column_emit(disk, a_i, j, &column, &mut *emit);
            column.release(disk);
            done?;
        }
        for (j, cols) in col_groups.iter().enumerate() {
            let c_ij = c_i.restrict(disk, &IndexSet::from_indices(dim, cols.iter().copied()), Axis::Cols)?;
            let sub = Subproblem { a: *a_i, c: c_ij, bound, row_group: group, col_group: j as u32 };
            let done = on_subproblem(&sub, emit);
            c_ij.release(disk);
            done?;
        }
        Ok((assign(dim, &col_groups, &removed), removed))
    })();
    c_i.release(disk);
    result
}
