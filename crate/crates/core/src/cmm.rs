//! Compressed multiplication of a product with few output nonzeros.
//!
//! For each repetition `t`, rows and columns are hashed into `r` buckets by
//! `h_t` and `h'_t`, and the polynomial
//!
//! ```text
//! p_t(x) = sum_k (sum_i A[i][k] x^{h_t(i)}) (sum_j C[k][j] x^{h'_t(j)})
//! ```
//!
//! is accumulated during one synchronized scan of `A` (column-major) and `C`
//! (row-major). The coefficient of `x^{h_t(i) + h'_t(j)}` in `p_t` equals
//! `[AC]_{ij}` unless another nonzero output lands on the same exponent; a
//! majority vote over the repetitions recovers the entry.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::hashing::PairwiseHash;
use crate::matrix::{log2_dim, CooMatrix, Disk, IndexSet, Layout, SparseMatrix, Triple};
use crate::semiring::Semiring;

pub const DEFAULT_GAMMA: f64 = 1.0 / 96.0;
pub const DEFAULT_ELL: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmmParams {
    pub gamma: f64,
    pub ell: u32,
    /// Buckets per side: `floor(4 gamma M / log U)`.
    pub r: usize,
    /// Repetitions: `ell * log U`.
    pub reps: usize,
    memory: usize,
    dim: u32,
}

impl CmmParams {
    /// Rejects parameters whose workspace `4 r reps` exceeds `M/2` or that
    /// leave no bucket at all.
    pub fn new(memory: usize, dim: u32, gamma: f64, ell: u32) -> Result<Self, Error> {
        if gamma.is_nan() || gamma <= 0.0 || ell == 0 {
            return Err(Error::InvalidParameter("gamma and ell must be positive"));
        }
        let log_u = log2_dim(dim) as f64;
        let r = libm::floor(4.0 * gamma * memory as f64 / log_u) as usize;
        let reps = ell as usize * log2_dim(dim) as usize;
        if r == 0 {
            return Err(Error::InvalidParameter("memory too small for a single bucket"));
        }
        if 4 * r * reps > memory / 2 {
            return Err(Error::InvalidParameter("polynomial workspace exceeds M/2"));
        }
        Ok(CmmParams {
            gamma,
            ell,
            r,
            reps,
            memory,
            dim,
        })
    }

    pub fn with_defaults(memory: usize, dim: u32) -> Result<Self, Error> {
        Self::new(memory, dim, DEFAULT_GAMMA, DEFAULT_ELL)
    }

    /// Output size a subproblem must stay below: `gamma M / log U`.
    pub fn output_bound(&self) -> f64 {
        self.gamma * self.memory as f64 / log2_dim(self.dim) as f64
    }

    /// Words held while building: polynomials plus one row and one column
    /// polynomial per repetition.
    pub fn workspace(&self) -> usize {
        4 * self.r * self.reps
    }

    fn hashes(&self, seed: u64) -> Vec<(PairwiseHash, PairwiseHash)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.reps)
            .map(|_| (PairwiseHash::random(&mut rng), PairwiseHash::random(&mut rng)))
            .collect()
    }
}

/// `reps` polynomials of degree below `2r - 1`, with the supports seen
/// while building them.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySketch<S> {
    r: usize,
    hashes: Vec<(PairwiseHash, PairwiseHash)>,
    polys: Vec<Vec<S>>,
    /// Rows of `A` holding a nonzero.
    pub rows: IndexSet,
    /// Columns of `C` holding a nonzero.
    pub cols: IndexSet,
}

impl<S: Semiring> PolySketch<S> {
    fn empty(params: &CmmParams, dim: u32, seed: u64) -> Self {
        PolySketch {
            r: params.r,
            hashes: params.hashes(seed),
            polys: vec![vec![S::zero(); 2 * params.r - 1]; params.reps],
            rows: IndexSet::empty(dim),
            cols: IndexSet::empty(dim),
        }
    }

    pub fn polynomials(&self) -> &[Vec<S>] {
        &self.polys
    }

    #[inline]
    fn exponent(&self, t: usize, i: u32, j: u32) -> usize {
        let (h, g) = self.hashes[t];
        h.bucket(i, self.r) + g.bucket(j, self.r)
    }

    /// The polynomials evaluated from their definition, term by term.
    pub fn direct(a: &CooMatrix<S>, c: &CooMatrix<S>, params: &CmmParams, seed: u64) -> Self {
        let mut sk = Self::empty(params, a.dim, seed);
        for x in &a.entries {
            sk.rows.insert(x.row);
            for y in c.entries.iter().filter(|y| y.row == x.col) {
                for t in 0..sk.polys.len() {
                    let e = sk.exponent(t, x.row, y.col);
                    sk.polys[t][e] = sk.polys[t][e].add(x.value.mul(y.value));
                }
            }
        }
        for y in &c.entries {
            sk.cols.insert(y.col);
        }
        sk
    }
}

/// Builds the sketch in one synchronized scan of both inputs.
///
/// Reads exactly `ceil(nnz(A)/B) + ceil(nnz(C)/B)` blocks and writes none.
pub fn build_polysketch<S: Semiring>(
    disk: &Disk<S>,
    a: &SparseMatrix<S>,
    c: &SparseMatrix<S>,
    params: &CmmParams,
    seed: u64,
) -> Result<PolySketch<S>, Error> {
    if a.dim() != c.dim() {
        return Err(Error::DimensionMismatch(a.dim(), c.dim()));
    }
    if a.nnz() > 0 && a.layout() != Layout::ColumnMajor {
        return Err(Error::LayoutMismatch {
            expected: Layout::ColumnMajor,
            found: a.layout(),
        });
    }
    if c.nnz() > 0 && c.layout() != Layout::RowMajor {
        return Err(Error::LayoutMismatch {
            expected: Layout::RowMajor,
            found: c.layout(),
        });
    }
    let mut sk = PolySketch::empty(params, a.dim(), seed);
    if a.nnz() == 0 || c.nnz() == 0 {
        // Still one pass over each input for the supports.
        disk.scan(a.run(), |x| {
            sk.rows.insert(x.row);
            Ok(())
        })?;
        disk.scan(c.run(), |y| {
            sk.cols.insert(y.col);
            Ok(())
        })?;
        return Ok(sk);
    }

    let _workspace = disk.reserve(params.workspace())?;
    let (r, reps) = (params.r, params.reps);
    let mut left = vec![vec![S::zero(); r]; reps];
    let mut right = vec![vec![S::zero(); r]; reps];
    let mut left_used: Vec<Vec<usize>> = vec![Vec::new(); reps];
    let mut right_used: Vec<Vec<usize>> = vec![Vec::new(); reps];

    let mut ra = disk.reader(a.run())?;
    let mut rc = disk.reader(c.run())?;
    loop {
        let ka = ra.peek()?.map(|x| x.col);
        let kc = rc.peek()?.map(|y| y.row);
        let k = match (ka, kc) {
            (None, None) => break,
            (Some(x), None) => x,
            (None, Some(y)) => y,
            (Some(x), Some(y)) => x.min(y),
        };
        while let Some(x) = ra.peek()?.copied().filter(|x| x.col == k) {
            ra.next()?;
            sk.rows.insert(x.row);
            for t in 0..reps {
                let b = sk.hashes[t].0.bucket(x.row, r);
                if left[t][b].is_zero() {
                    left_used[t].push(b);
                }
                left[t][b] = left[t][b].add(x.value);
            }
        }
        while let Some(y) = rc.peek()?.copied().filter(|y| y.row == k) {
            rc.next()?;
            sk.cols.insert(y.col);
            for t in 0..reps {
                let b = sk.hashes[t].1.bucket(y.col, r);
                if right[t][b].is_zero() {
                    right_used[t].push(b);
                }
                right[t][b] = right[t][b].add(y.value);
            }
        }
        for t in 0..reps {
            // A bucket whose sum passed through zero is listed twice.
            left_used[t].sort_unstable();
            left_used[t].dedup();
            right_used[t].sort_unstable();
            right_used[t].dedup();
            for &u in &left_used[t] {
                let x = left[t][u];
                for &v in &right_used[t] {
                    let p = &mut sk.polys[t][u + v];
                    *p = p.add(x.mul(right[t][v]));
                }
            }
            for u in left_used[t].drain(..) {
                left[t][u] = S::zero();
            }
            for v in right_used[t].drain(..) {
                right[t][v] = S::zero();
            }
        }
    }
    Ok(sk)
}

/// Boyer-Moore majority vote using only equality tests: `Some(v)` when `v`
/// occurs in more than half of `values`.
pub fn majority<S: PartialEq + Copy>(values: &[S]) -> Option<S> {
    let mut candidate = None;
    let mut count = 0usize;
    for &v in values {
        match candidate {
            _ if count == 0 => {
                candidate = Some(v);
                count = 1;
            }
            Some(c) if c == v => count += 1,
            _ => count -= 1,
        }
    }
    let c = candidate?;
    let support = values.iter().filter(|&&v| v == c).count();
    (2 * support > values.len()).then_some(c)
}

/// Decodes every candidate pair and emits the nonzero majorities. No I/O.
pub fn recover_and_emit<S, F>(
    sk: &PolySketch<S>,
    rows: &IndexSet,
    cols: &IndexSet,
    mut emit: F,
) -> Result<(), Error>
where
    S: Semiring,
    F: FnMut(Triple<S>) -> Result<(), Error>,
{
    let mut votes = Vec::with_capacity(sk.polys.len());
    for i in rows.iter() {
        for j in cols.iter() {
            votes.clear();
            votes.extend((0..sk.polys.len()).map(|t| sk.polys[t][sk.exponent(t, i, j)]));
            if let Some(v) = majority(&votes) {
                if !v.is_zero() {
                    emit(Triple::new(i, j, v))?;
                }
            }
        }
    }
    Ok(())
}

/// Multiplies `A` (column-major) by `C` (row-major) with one scan of each,
/// assuming `nnz(AC)` is below [`CmmParams::output_bound`].
pub fn cmm_multiply<S, F>(
    disk: &Disk<S>,
    a: &SparseMatrix<S>,
    c: &SparseMatrix<S>,
    params: &CmmParams,
    seed: u64,
    emit: F,
) -> Result<(), Error>
where
    S: Semiring,
    F: FnMut(Triple<S>) -> Result<(), Error>,
{
    let sk = build_polysketch(disk, a, c, params, seed)?;
    recover_and_emit(&sk, &sk.rows, &sk.cols, emit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{gen_cancellation_instance, gen_random};
    use crate::io::IoConfig;
    use crate::oracle::oracle_multiply;
    use crate::semiring::IntRing;

    #[test]
    fn params_respect_workspace() {
        let p = CmmParams::with_defaults(1 << 12, 64).unwrap();
        assert_eq!((p.r, p.reps), (28, 18));
        assert!(p.workspace() <= (1 << 11));
        assert!(CmmParams::new(1 << 12, 64, 1.0 / 8.0, 3).is_err());
        assert!(CmmParams::with_defaults(64, 1 << 12).is_err());
    }

    #[test]
    fn majority_examples() {
        assert_eq!(majority(&['a', 'a', 'b']), Some('a'));
        assert_eq!(majority(&['a', 'b', 'c']), None);
        assert_eq!(majority(&['a', 'b', 'a', 'b', 'a']), Some('a'));
        assert_eq!(majority::<u8>(&[]), None);
        assert_eq!(majority(&['a', 'b']), None);
    }

    fn store(disk: &Disk<IntRing>, m: &CooMatrix<IntRing>, layout: Layout) -> SparseMatrix<IntRing> {
        let mut m = m.clone();
        m.sort(layout);
        SparseMatrix::store(disk, &m, layout).unwrap()
    }

    #[test]
    fn zero_inputs_give_zero_polynomials() {
        let disk = Disk::new(IoConfig::new(1 << 12, 64).unwrap());
        let z = CooMatrix::<IntRing>::new(8, vec![]).unwrap();
        let p = CmmParams::with_defaults(1 << 12, 8).unwrap();
        let sk = build_polysketch(&disk, &store(&disk, &z, Layout::ColumnMajor), &store(&disk, &z, Layout::RowMajor), &p, 1)
            .unwrap();
        assert!(sk.polynomials().iter().flatten().all(|v| v.is_zero()));
        assert_eq!(disk.tally().reads, 0);
    }

    #[test]
    fn two_by_two_identity_by_hand() {
        let disk = Disk::new(IoConfig::new(1 << 12, 64).unwrap());
        let id = CooMatrix::<IntRing>::identity(2);
        let p = CmmParams::new(1 << 12, 2, 1.0 / 1024.0, 1).unwrap();
        assert_eq!((p.r, p.reps), (16, 1));
        let sk = build_polysketch(&disk, &store(&disk, &id, Layout::ColumnMajor), &store(&disk, &id, Layout::RowMajor), &p, 3)
            .unwrap();
        // p(x) = x^{h(0)} x^{h'(0)} + x^{h(1)} x^{h'(1)}.
        let mut expected = vec![IntRing(0); 2 * p.r - 1];
        for k in 0..2 {
            let e = sk.exponent(0, k, k);
            expected[e] = expected[e].add(IntRing(1));
        }
        assert_eq!(sk.polynomials()[0], expected);
        assert_eq!(sk, PolySketch::direct(&id, &id, &p, 3));
    }

    #[test]
    fn single_scan_reads() {
        let disk = Disk::new(IoConfig::new(1 << 12, 64).unwrap());
        let a = gen_random::<IntRing>(64, 130, 1).unwrap();
        let c = gen_random::<IntRing>(64, 70, 2).unwrap();
        let (sa, sc) = (store(&disk, &a, Layout::ColumnMajor), store(&disk, &c, Layout::RowMajor));
        let p = CmmParams::with_defaults(1 << 12, 64).unwrap();
        let before = disk.tally();
        build_polysketch(&disk, &sa, &sc, &p, 5).unwrap();
        let spent = disk.tally().since(before);
        assert_eq!((spent.reads, spent.writes), (5, 0));
        assert!(disk.budget().peak() <= p.workspace() + 2 * 64);
    }

    #[test]
    fn bucket_sum_through_zero_counts_once() {
        let disk = Disk::new(IoConfig::new(1 << 12, 64).unwrap());
        let p = CmmParams::new(1 << 12, 4, 1.0 / 1024.0, 1).unwrap();
        let a = CooMatrix::new(
            4,
            vec![
                Triple::new(0, 0, IntRing(1)),
                Triple::new(1, 0, IntRing(-1)),
                Triple::new(2, 0, IntRing(2)),
            ],
        )
        .unwrap();
        let c = CooMatrix::new(4, vec![Triple::new(0, 3, IntRing(5))]).unwrap();
        for seed in 0..50 {
            let sk = build_polysketch(&disk, &store(&disk, &a, Layout::ColumnMajor), &store(&disk, &c, Layout::RowMajor), &p, seed)
                .unwrap();
            assert_eq!(sk, PolySketch::direct(&a, &c, &p, seed));
        }
    }

    #[test]
    fn rejects_wrong_layouts() {
        let disk = Disk::new(IoConfig::new(1 << 12, 64).unwrap());
        let a = gen_random::<IntRing>(16, 40, 1).unwrap();
        let p = CmmParams::with_defaults(1 << 12, 16).unwrap();
        let row = store(&disk, &a, Layout::RowMajor);
        assert!(matches!(
            build_polysketch(&disk, &row, &row, &p, 0),
            Err(Error::LayoutMismatch { .. })
        ));
    }

    #[test]
    fn identity_and_cancellation() {
        let disk = Disk::new(IoConfig::new(1 << 12, 64).unwrap());
        let p = CmmParams::with_defaults(1 << 12, 16).unwrap();
        let id = CooMatrix::<IntRing>::identity(5);
        let id5 = CooMatrix::new(16, id.entries.clone()).unwrap();
        let mut got = Vec::new();
        cmm_multiply(&disk, &store(&disk, &id5, Layout::ColumnMajor), &store(&disk, &id5, Layout::RowMajor), &p, 1, |t| {
            got.push(t);
            Ok(())
        })
        .unwrap();
        assert_eq!(got, id.entries);

        let inst = gen_cancellation_instance(16, 8, 4).unwrap();
        let mut per_row = [0; 16];
        for t in &inst.a.entries {
            per_row[t.row as usize] += 1;
        }
        let a = CooMatrix::new(16, inst.a.entries.iter().copied().filter(|t| per_row[t.row as usize] == 2).collect())
            .unwrap();
        got.clear();
        cmm_multiply(&disk, &store(&disk, &a, Layout::ColumnMajor), &store(&disk, &inst.c, Layout::RowMajor), &p, 2, |t| {
            got.push(t);
            Ok(())
        })
        .unwrap();
        assert!(got.is_empty());
    }

    #[test]
    fn decodes_within_bound() {
        // Instances with nnz(AC) <= r/4 = 7 on 64 indices.
        let p = CmmParams::with_defaults(1 << 12, 64).unwrap();
        let (mut runs, mut exact, mut seed) = (0, 0, 0);
        while runs < 100 {
            seed += 1;
            let a = gen_random::<IntRing>(64, 20, 2 * seed).unwrap();
            let c = gen_random::<IntRing>(64, 20, 2 * seed + 1).unwrap();
            let expected = oracle_multiply(&a, &c).unwrap().triples;
            if expected.len() > p.r / 4 {
                continue;
            }
            runs += 1;
            let disk = Disk::new(IoConfig::new(1 << 12, 64).unwrap());
            let mut got = Vec::new();
            cmm_multiply(&disk, &store(&disk, &a, Layout::ColumnMajor), &store(&disk, &c, Layout::RowMajor), &p, seed, |t| {
                got.push(t);
                Ok(())
            })
            .unwrap();
            got.sort_by_key(Triple::row_major_key);
            exact += usize::from(got == expected);
        }
        assert!(exact >= 99, "{exact}/100");
    }
}
