//! Instance generators. All are deterministic functions of their seed and
//! return row-major [`CooMatrix`] values.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::matrix::{CooMatrix, Layout, Triple};
use crate::semiring::{Boolean, IntRing, Semiring, Tropical};

/// Largest magnitude of a generated integer value. Keeps every inner
/// product of dimension <= 4096 below 2^40.
pub const MAX_INT_VALUE: i64 = 1000;

/// Value samplers for the concrete instances.
pub trait SampleValue: Semiring {
    /// Any value other than the semiring zero.
    fn sample_nonzero<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// A value that cannot take part in cancellation.
    fn sample_positive<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl SampleValue for IntRing {
    fn sample_nonzero<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let v = rng.gen_range(1..=MAX_INT_VALUE);
        IntRing(if rng.gen() { v } else { -v })
    }

    fn sample_positive<R: Rng + ?Sized>(rng: &mut R) -> Self {
        IntRing(rng.gen_range(1..=MAX_INT_VALUE))
    }
}

impl SampleValue for Boolean {
    fn sample_nonzero<R: Rng + ?Sized>(_rng: &mut R) -> Self {
        Boolean(true)
    }

    fn sample_positive<R: Rng + ?Sized>(_rng: &mut R) -> Self {
        Boolean(true)
    }
}

impl SampleValue for Tropical {
    fn sample_nonzero<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Tropical(rng.gen_range(0..=MAX_INT_VALUE))
    }

    fn sample_positive<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::sample_nonzero(rng)
    }
}

fn row_major<S: Semiring>(dim: u32, mut entries: Vec<Triple<S>>) -> CooMatrix<S> {
    entries.sort_by_key(Triple::row_major_key);
    CooMatrix { dim, entries }
}

/// `nnz` distinct positions drawn uniformly without replacement.
pub fn gen_random<S: SampleValue>(dim: u32, nnz: usize, seed: u64) -> Result<CooMatrix<S>, Error> {
    let cells = dim as usize * dim as usize;
    if nnz > cells {
        return Err(Error::InvalidShape("more nonzeros than matrix cells"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = rand::seq::index::sample(&mut rng, cells, nnz).into_vec();
    positions.sort_unstable();
    let entries = positions
        .into_iter()
        .map(|p| {
            Triple::new(
                (p / dim as usize) as u32,
                (p % dim as usize) as u32,
                S::sample_nonzero(&mut rng),
            )
        })
        .collect();
    Ok(CooMatrix { dim, entries })
}

/// A dense `sqrt(z) x (n/sqrt(z))` matrix times a dense
/// `(n/sqrt(z)) x sqrt(z)` matrix, embedded in dimension
/// `max(sqrt(z), n/sqrt(z))`. Each factor has `n` nonzeros, the product `z`.
pub fn gen_hard_instance<S: SampleValue>(
    n: usize,
    z: usize,
    seed: u64,
) -> Result<(CooMatrix<S>, CooMatrix<S>), Error> {
    if z == 0 || n == 0 {
        return Err(Error::InvalidShape("n and z must be positive"));
    }
    let side = z.isqrt();
    if side * side != z {
        return Err(Error::InvalidShape("sqrt(z) must be an integer"));
    }
    if !n.is_multiple_of(side) {
        return Err(Error::InvalidShape("n / sqrt(z) must be an integer"));
    }
    if (z as u128) >= (n as u128) * (n as u128) {
        return Err(Error::InvalidShape("z must be below n^2"));
    }
    let inner = n / side;
    let dim = u32::try_from(side.max(inner)).map_err(|_| Error::InvalidShape("dimension too large"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Vec::with_capacity(n);
    for i in 0..side as u32 {
        for k in 0..inner as u32 {
            a.push(Triple::new(i, k, S::sample_positive(&mut rng)));
        }
    }
    let mut c = Vec::with_capacity(n);
    for k in 0..inner as u32 {
        for j in 0..side as u32 {
            c.push(Triple::new(k, j, S::sample_positive(&mut rng)));
        }
    }
    Ok((CooMatrix { dim, entries: a }, CooMatrix { dim, entries: c }))
}

/// A product with `pairs` cancelled output positions and `pairs` nonzero ones.
#[derive(Debug, Clone, PartialEq)]
pub struct CancellationInstance {
    pub a: CooMatrix<IntRing>,
    pub c: CooMatrix<IntRing>,
    /// Nonzero entries of the product, known from the construction.
    pub z: usize,
    /// Elementary products, known from the construction.
    pub elementary: usize,
}

/// Builds an integer instance where `pairs` output positions receive two
/// elementary products `a*w + a*(-w) = 0` and `pairs` further positions
/// receive a single nonzero product.
///
/// Rows are spread over up to `dim/2` gadgets; gadget `g` owns two inner
/// indices and one output column, so gadgets never interact.
pub fn gen_cancellation_instance(
    dim: u32,
    pairs: usize,
    seed: u64,
) -> Result<CancellationInstance, Error> {
    if 2 * pairs > dim as usize {
        return Err(Error::InvalidShape("cancellation instance needs 2*pairs <= dim"));
    }
    if pairs == 0 {
        return Ok(CancellationInstance {
            a: CooMatrix {
                dim,
                entries: Vec::new(),
            },
            c: CooMatrix {
                dim,
                entries: Vec::new(),
            },
            z: 0,
            elementary: 0,
        });
    }
    let gadgets = pairs.min(dim as usize / 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<u32> = (0..dim).collect();
    let mut inner: Vec<u32> = (0..dim).collect();
    let mut cols: Vec<u32> = (0..dim).collect();
    rows.shuffle(&mut rng);
    inner.shuffle(&mut rng);
    cols.shuffle(&mut rng);

    let mut a = Vec::with_capacity(3 * pairs);
    let mut c = Vec::with_capacity(2 * gadgets);
    for g in 0..gadgets {
        let w = IntRing::sample_positive(&mut rng);
        c.push(Triple::new(inner[2 * g], cols[g], w));
        c.push(Triple::new(inner[2 * g + 1], cols[g], IntRing(-w.0)));
    }
    for p in 0..pairs {
        let g = p % gadgets;
        let v = IntRing::sample_positive(&mut rng);
        a.push(Triple::new(rows[p], inner[2 * g], v));
        a.push(Triple::new(rows[p], inner[2 * g + 1], v));
        let u = IntRing::sample_positive(&mut rng);
        a.push(Triple::new(rows[pairs + p], inner[2 * g], u));
    }
    Ok(CancellationInstance {
        a: row_major(dim, a),
        c: row_major(dim, c),
        z: pairs,
        elementary: 3 * pairs,
    })
}

/// Builds an integer instance whose product is zero although every row of
/// `A` meets a nonzero of `C`: each row is a cancelling pair for one of
/// `dim/2` gadgets.
pub fn gen_full_cancellation(dim: u32, seed: u64) -> Result<CancellationInstance, Error> {
    if dim < 2 {
        return Err(Error::InvalidShape("full cancellation needs dim >= 2"));
    }
    let gadgets = dim as usize / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inner: Vec<u32> = (0..dim).collect();
    let mut cols: Vec<u32> = (0..dim).collect();
    inner.shuffle(&mut rng);
    cols.shuffle(&mut rng);
    let mut c = Vec::with_capacity(2 * gadgets);
    for g in 0..gadgets {
        let w = IntRing::sample_positive(&mut rng);
        c.push(Triple::new(inner[2 * g], cols[g], w));
        c.push(Triple::new(inner[2 * g + 1], cols[g], IntRing(-w.0)));
    }
    let mut a = Vec::with_capacity(2 * dim as usize);
    for row in 0..dim {
        let g = rng.gen_range(0..gadgets);
        let v = IntRing::sample_nonzero(&mut rng);
        a.push(Triple::new(row, inner[2 * g], v));
        a.push(Triple::new(row, inner[2 * g + 1], v));
    }
    Ok(CancellationInstance {
        a: row_major(dim, a),
        c: row_major(dim, c),
        z: 0,
        elementary: 2 * dim as usize,
    })
}

/// The layout every generator produces.
pub const GENERATED_LAYOUT: Layout = Layout::RowMajor;
