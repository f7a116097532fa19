//! In-RAM ground truth for the product of two matrices. Never charged I/Os.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::matrix::{CooMatrix, Triple};
use crate::semiring::Semiring;

/// Largest dimension the oracle accepts.
pub const ORACLE_MAX_DIM: u32 = 4096;
/// Largest input size the oracle accepts.
pub const ORACLE_MAX_NNZ: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactProduct<S> {
    /// Nonzero entries of the product in row-major order.
    pub triples: Vec<Triple<S>>,
    pub row_nnz: Vec<usize>,
    pub col_nnz: Vec<usize>,
    /// Nonzero elementary products `A[i][k] * C[k][j]`.
    pub elementary: u64,
}

impl<S> ExactProduct<S> {
    pub fn z(&self) -> usize {
        self.triples.len()
    }
}

fn check_limits<S>(a: &CooMatrix<S>, c: &CooMatrix<S>) -> Result<(), Error> {
    if a.dim != c.dim {
        return Err(Error::DimensionMismatch(a.dim, c.dim));
    }
    let nnz = a.entries.len().max(c.entries.len());
    if a.dim > ORACLE_MAX_DIM || nnz > ORACLE_MAX_NNZ {
        return Err(Error::OracleLimit { dim: a.dim, nnz });
    }
    Ok(())
}

/// Row-indexed adjacency of `m`: for each row, its `(col, value)` pairs.
fn rows_of<S: Copy>(m: &CooMatrix<S>) -> Vec<Vec<(u32, S)>> {
    let mut rows = vec![Vec::new(); m.dim as usize];
    for t in &m.entries {
        rows[t.row as usize].push((t.col, t.value));
    }
    rows
}

/// Exact product by a join over the inner index with a dense accumulator per
/// output row.
pub fn oracle_multiply<S: Semiring>(
    a: &CooMatrix<S>,
    c: &CooMatrix<S>,
) -> Result<ExactProduct<S>, Error> {
    check_limits(a, c)?;
    let dim = a.dim as usize;
    let a_rows = rows_of(a);
    let c_rows = rows_of(c);

    let mut acc: Vec<Option<S>> = vec![None; dim];
    let mut touched = Vec::new();
    let mut triples = Vec::new();
    let mut row_nnz = vec![0; dim];
    let mut col_nnz = vec![0; dim];
    let mut elementary = 0u64;

    for (i, row) in a_rows.iter().enumerate() {
        for &(k, x) in row {
            for &(j, y) in &c_rows[k as usize] {
                elementary += 1;
                let p = x.mul(y);
                let slot = &mut acc[j as usize];
                *slot = Some(match *slot {
                    Some(s) => s.add(p),
                    None => {
                        touched.push(j);
                        p
                    }
                });
            }
        }
        touched.sort_unstable();
        for &j in &touched {
            if let Some(v) = acc[j as usize].take() {
                if !v.is_zero() {
                    triples.push(Triple::new(i as u32, j, v));
                    row_nnz[i] += 1;
                    col_nnz[j as usize] += 1;
                }
            }
        }
        touched.clear();
    }
    Ok(ExactProduct {
        triples,
        row_nnz,
        col_nnz,
        elementary,
    })
}

/// `sum_k |{i : A[i][k] != 0}| * |{j : C[k][j] != 0}|`.
pub fn oracle_elementary_count<S>(a: &CooMatrix<S>, c: &CooMatrix<S>) -> u64 {
    let dim = a.dim.max(c.dim) as usize;
    let mut a_col = vec![0u64; dim];
    let mut c_row = vec![0u64; dim];
    for t in &a.entries {
        a_col[t.col as usize] += 1;
    }
    for t in &c.entries {
        c_row[t.row as usize] += 1;
    }
    a_col.iter().zip(&c_row).map(|(x, y)| x * y).sum()
}

/// Dense triple-loop product. Quadratic memory, cubic time; a second path
/// for cross-checking [`oracle_multiply`] on small inputs.
pub fn dense_reference<S: Semiring>(
    a: &CooMatrix<S>,
    c: &CooMatrix<S>,
) -> Result<Vec<Triple<S>>, Error> {
    check_limits(a, c)?;
    let dim = a.dim as usize;
    let densify = |m: &CooMatrix<S>| {
        let mut d = vec![S::zero(); dim * dim];
        for t in &m.entries {
            d[t.row as usize * dim + t.col as usize] = t.value;
        }
        d
    };
    let (da, dc) = (densify(a), densify(c));
    let mut out = Vec::new();
    for i in 0..dim {
        for j in 0..dim {
            let mut s = S::zero();
            for k in 0..dim {
                s = s.add(da[i * dim + k].mul(dc[k * dim + j]));
            }
            if !s.is_zero() {
                out.push(Triple::new(i as u32, j as u32, s));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{gen_cancellation_instance, gen_hard_instance, gen_random};
    use crate::semiring::{Boolean, IntRing};

    #[test]
    fn identity_squared() {
        let id = CooMatrix::<IntRing>::identity(17);
        let p = oracle_multiply(&id, &id).unwrap();
        assert_eq!(p.triples, id.entries);
        assert_eq!(p.z(), 17);
        assert_eq!(oracle_elementary_count(&id, &id), 17);
    }

    #[test]
    fn cancellation_pair() {
        let a = CooMatrix::new(2, vec![Triple::new(0, 0, IntRing(1)), Triple::new(0, 1, IntRing(1))])
            .unwrap();
        let c = CooMatrix::new(2, vec![Triple::new(0, 0, IntRing(1)), Triple::new(1, 0, IntRing(-1))])
            .unwrap();
        let p = oracle_multiply(&a, &c).unwrap();
        assert_eq!(p.z(), 0);
        assert!(p.elementary >= 2);
    }

    #[test]
    fn generated_cancellation_counts() {
        let inst = gen_cancellation_instance(64, 20, 5).unwrap();
        let p = oracle_multiply(&inst.a, &inst.c).unwrap();
        assert_eq!(p.z(), inst.z);
        assert_eq!(p.elementary as usize, inst.elementary);
    }

    #[test]
    fn join_matches_triple_loop() {
        let a = gen_random::<IntRing>(64, 500, 1).unwrap();
        let c = gen_random::<IntRing>(64, 500, 2).unwrap();
        let p = oracle_multiply(&a, &c).unwrap();
        assert_eq!(p.triples, dense_reference(&a, &c).unwrap());
        assert_eq!(p.row_nnz.iter().sum::<usize>(), p.z());
        assert_eq!(p.col_nnz.iter().sum::<usize>(), p.z());
    }

    #[test]
    fn elementary_count_formula() {
        let a = CooMatrix::new(8, (0..3).map(|i| Triple::new(i, 5, IntRing(1))).collect()).unwrap();
        let c = CooMatrix::new(8, (0..4).map(|j| Triple::new(5, j, IntRing(1))).collect()).unwrap();
        assert_eq!(oracle_elementary_count(&a, &c), 12);
        let (a, c) = gen_hard_instance::<IntRing>(1024, 256, 0).unwrap();
        assert_eq!(oracle_elementary_count(&a, &c), 1024 * 16);
        assert_eq!(oracle_multiply(&a, &c).unwrap().z(), 256);
    }

    #[test]
    fn boolean_z_counts_reachable_pairs() {
        let a = gen_random::<Boolean>(40, 200, 3).unwrap();
        let c = gen_random::<Boolean>(40, 200, 4).unwrap();
        let p = oracle_multiply(&a, &c).unwrap();
        let mut reach = vec![false; 40 * 40];
        for x in &a.entries {
            for y in c.entries.iter().filter(|y| y.row == x.col) {
                reach[x.row as usize * 40 + y.col as usize] = true;
            }
        }
        assert_eq!(p.z(), reach.iter().filter(|&&r| r).count());
    }

    #[test]
    fn rejects_mismatch_and_limits() {
        let a = CooMatrix::<IntRing>::identity(3);
        let c = CooMatrix::<IntRing>::identity(4);
        assert_eq!(oracle_multiply(&a, &c), Err(Error::DimensionMismatch(3, 4)));
        let big = CooMatrix::<IntRing>::identity(5000);
        assert!(matches!(oracle_multiply(&big, &big), Err(Error::OracleLimit { .. })));
    }
}
