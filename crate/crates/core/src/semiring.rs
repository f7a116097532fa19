//! The scalar algebra every algorithm in this crate is restricted to.
//!
//! Algorithms only see [`Semiring`]: `zero`, `one`, `add`, `mul` and the
//! equality test from `PartialEq`. There is no subtraction or division, not
//! even for [`IntRing`], whose underlying representation would allow it.

use core::fmt;

use crate::error::Error;

/// A semiring `(S, +, *, 0, 1)` with an equality test.
///
/// Implementations must satisfy:
/// - `add` is associative and commutative with identity `zero`
/// - `mul` is associative with identity `one` and distributes over `add`
/// - `zero` annihilates: `zero * a == a * zero == zero`
pub trait Semiring: Copy + PartialEq + fmt::Debug + 'static {
    /// Identifier used in matrix files (`int64`, `bool`, `tropical`).
    const NAME: &'static str;

    fn zero() -> Self;

    fn one() -> Self;

    fn add(self, rhs: Self) -> Self;

    fn mul(self, rhs: Self) -> Self;

    #[inline]
    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }

    /// Parses the decimal token used for this instance in matrix files.
    fn parse_literal(token: &str) -> Option<Self>;

    /// Writes the decimal token used for this instance in matrix files.
    fn write_literal(&self, f: &mut dyn fmt::Write) -> fmt::Result;
}

/// Adds `a` to itself `n` times using only semiring addition.
///
/// Runs in `O(log n)` additions by doubling. `n = 0` is rejected because the
/// empty sum is not an `n`-fold multiple the sketches are allowed to use.
pub fn nat_scale<S: Semiring>(n: u64, a: S) -> Result<S, Error> {
    if n == 0 {
        return Err(Error::ZeroMultiplier);
    }
    let mut acc: Option<S> = None;
    let mut power = a;
    let mut rest = n;
    loop {
        if rest & 1 == 1 {
            acc = Some(match acc {
                Some(x) => x.add(power),
                None => power,
            });
        }
        rest >>= 1;
        if rest == 0 {
            break;
        }
        power = power.add(power);
    }
    // n >= 1 guarantees at least one set bit.
    Ok(acc.unwrap_or(power))
}

/// The integers modulo 2^64 viewed as a semiring. Admits cancellation.
///
/// Generators keep magnitudes below 2^40 so every intermediate of the
/// reference computations is exact.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct IntRing(pub i64);

impl Semiring for IntRing {
    const NAME: &'static str = "int64";

    #[inline]
    fn zero() -> Self {
        IntRing(0)
    }

    #[inline]
    fn one() -> Self {
        IntRing(1)
    }

    #[inline]
    fn add(self, rhs: Self) -> Self {
        IntRing(self.0.wrapping_add(rhs.0))
    }

    #[inline]
    fn mul(self, rhs: Self) -> Self {
        IntRing(self.0.wrapping_mul(rhs.0))
    }

    fn parse_literal(token: &str) -> Option<Self> {
        token.parse().ok().map(IntRing)
    }

    fn write_literal(&self, f: &mut dyn fmt::Write) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for IntRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Boolean OR/AND semiring. No cancellation.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Boolean(pub bool);

impl Semiring for Boolean {
    const NAME: &'static str = "bool";

    #[inline]
    fn zero() -> Self {
        Boolean(false)
    }

    #[inline]
    fn one() -> Self {
        Boolean(true)
    }

    #[inline]
    fn add(self, rhs: Self) -> Self {
        Boolean(self.0 | rhs.0)
    }

    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Boolean(self.0 & rhs.0)
    }

    fn parse_literal(token: &str) -> Option<Self> {
        match token {
            "0" => Some(Boolean(false)),
            "1" => Some(Boolean(true)),
            _ => None,
        }
    }

    fn write_literal(&self, f: &mut dyn fmt::Write) -> fmt::Result {
        f.write_str(if self.0 { "1" } else { "0" })
    }
}

impl fmt::Debug for Boolean {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The (min, +) semiring over `i64` with `+inf` (stored as `i64::MAX`) as zero
/// and `0` as one. No cancellation.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tropical(pub i64);

impl Tropical {
    pub const INFINITY: Tropical = Tropical(i64::MAX);
}

impl Semiring for Tropical {
    const NAME: &'static str = "tropical";

    #[inline]
    fn zero() -> Self {
        Self::INFINITY
    }

    #[inline]
    fn one() -> Self {
        Tropical(0)
    }

    #[inline]
    fn add(self, rhs: Self) -> Self {
        Tropical(self.0.min(rhs.0))
    }

    #[inline]
    fn mul(self, rhs: Self) -> Self {
        if self == Self::INFINITY || rhs == Self::INFINITY {
            Self::INFINITY
        } else {
            // Finite values stay far below the sentinel in generated data.
            Tropical(self.0.saturating_add(rhs.0).min(i64::MAX - 1))
        }
    }

    fn parse_literal(token: &str) -> Option<Self> {
        let v: i64 = token.parse().ok()?;
        // The sentinel is the semiring zero and never appears as a stored entry.
        (v != i64::MAX).then_some(Tropical(v))
    }

    fn write_literal(&self, f: &mut dyn fmt::Write) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for Tropical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == Self::INFINITY {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check_axioms<S: Semiring>(mut sample: impl FnMut() -> S) {
        for _ in 0..1000 {
            let (a, b, c) = (sample(), sample(), sample());
            assert_eq!(a.add(b).add(c), a.add(b.add(c)));
            assert_eq!(a.add(b), b.add(a));
            assert_eq!(a.add(S::zero()), a);
            assert_eq!(a.mul(b).mul(c), a.mul(b.mul(c)));
            assert_eq!(a.mul(S::one()), a);
            assert_eq!(S::one().mul(a), a);
            assert_eq!(a.mul(b.add(c)), a.mul(b).add(a.mul(c)));
            assert_eq!(b.add(c).mul(a), b.mul(a).add(c.mul(a)));
            assert_eq!(a.mul(S::zero()), S::zero());
            assert_eq!(S::zero().mul(a), S::zero());
            #[allow(clippy::eq_op)]
            {
                assert!(a == a);
            }
            if a == b && b == c {
                assert!(a == c);
            }
        }
    }

    #[test]
    fn axioms_hold_on_sampled_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        check_axioms(|| IntRing(rng.gen_range(-(1 << 20)..(1 << 20))));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        check_axioms(|| Boolean(rng.gen()));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        check_axioms(|| {
            if rng.gen_ratio(1, 10) {
                Tropical::INFINITY
            } else {
                Tropical(rng.gen_range(-1000..1000))
            }
        });
    }

    #[test]
    fn add_and_mul_examples() {
        assert_eq!(IntRing(2).add(IntRing(-2)), IntRing::zero());
        assert_eq!(Boolean(true).add(Boolean(false)), Boolean(true));
        assert_eq!(Tropical(3).add(Tropical(5)), Tropical(3));
        assert_eq!(IntRing(3).mul(IntRing(4)), IntRing(12));
        assert_eq!(Boolean(true).mul(Boolean(true)), Boolean(true));
        assert_eq!(Tropical(3).mul(Tropical(5)), Tropical(8));
    }

    #[test]
    fn integer_instance_cancels() {
        // 1*1 + 1*(-1): two nonzero elementary products summing to zero.
        let s = IntRing(1).mul(IntRing(1)).add(IntRing(1).mul(IntRing(-1)));
        assert!(s.is_zero());
    }

    #[test]
    fn nat_scale_examples() {
        assert_eq!(nat_scale(1, IntRing(17)).unwrap(), IntRing(17));
        assert_eq!(nat_scale(3, IntRing(2)).unwrap(), IntRing(6));
        assert_eq!(nat_scale(5, Boolean(true)).unwrap(), Boolean(true));
        assert_eq!(nat_scale(9, Tropical(4)).unwrap(), Tropical(4));
        assert!(matches!(nat_scale(0, IntRing(1)), Err(Error::ZeroMultiplier)));
    }

    #[test]
    fn nat_scale_matches_repeated_addition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let a = IntRing(rng.gen_range(-1000..1000));
            let mut expected = a;
            for n in 2..=64u64 {
                expected = a.add(expected);
                assert_eq!(nat_scale(n, a).unwrap(), a.add(nat_scale(n - 1, a).unwrap()));
                assert_eq!(nat_scale(n, a).unwrap(), expected);
            }
        }
    }

    #[test]
    fn literals_round_trip() {
        let mut s = String::new();
        IntRing(-42).write_literal(&mut s).unwrap();
        assert_eq!(IntRing::parse_literal(&s), Some(IntRing(-42)));
        assert_eq!(Boolean::parse_literal("1"), Some(Boolean(true)));
        assert_eq!(Boolean::parse_literal("2"), None);
        assert_eq!(Tropical::parse_literal("x"), None);
    }
}
