//! Pairwise-independent hashing over the Mersenne prime field `2^31 - 1`.

use rand::Rng;

/// The field modulus `p = 2^31 - 1`.
pub const MERSENNE_31: u64 = (1 << 31) - 1;

#[inline]
fn reduce(x: u64) -> u64 {
    let y = (x & MERSENNE_31) + (x >> 31);
    let y = (y & MERSENNE_31) + (y >> 31);
    if y >= MERSENNE_31 {
        y - MERSENNE_31
    } else {
        y
    }
}

/// `h(x) = (a*x + b) mod p` with `a` in `[1, p)` and `b` in `[0, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairwiseHash {
    a: u64,
    b: u64,
}

impl PairwiseHash {
    pub fn new(a: u64, b: u64) -> Self {
        assert!((1..MERSENNE_31).contains(&a) && b < MERSENNE_31);
        PairwiseHash { a, b }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        PairwiseHash {
            a: rng.gen_range(1..MERSENNE_31),
            b: rng.gen_range(0..MERSENNE_31),
        }
    }

    /// Value in `[0, p)`. Keys must be below `p`.
    #[inline]
    pub fn hash(&self, x: u32) -> u64 {
        debug_assert!((x as u64) < MERSENNE_31);
        reduce(self.a * x as u64 + self.b)
    }

    /// Value in `[0, r)`.
    #[inline]
    pub fn bucket(&self, x: u32, r: usize) -> usize {
        (self.hash(x) % r as u64) as usize
    }
}

/// A random polynomial of degree 3 over `GF(p)`: a 4-wise independent
/// family, so in particular pairwise independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FourWiseHash {
    coeffs: [u64; 4],
}

impl FourWiseHash {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        FourWiseHash {
            coeffs: core::array::from_fn(|_| rng.gen_range(0..MERSENNE_31)),
        }
    }

    /// Value in `[0, p)`. Keys must be below `p`.
    #[inline]
    pub fn hash(&self, x: u32) -> u64 {
        debug_assert!((x as u64) < MERSENNE_31);
        let x = x as u64;
        self.coeffs
            .iter()
            .fold(0, |acc, &c| reduce(reduce(acc * x) + c))
    }
}

/// Derives an independent seed for sub-stream `tag` of `seed` (SplitMix64).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
