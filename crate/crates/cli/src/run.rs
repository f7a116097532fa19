//! One multiplication on a fresh simulated disk, optionally checked
//! against the in-memory oracle.

use ssmm_core::driver::{multiply, EmitSink, Mode, RunReport};
use ssmm_core::oracle::{oracle_multiply, ORACLE_MAX_DIM, ORACLE_MAX_NNZ};
use ssmm_core::{CooMatrix, Error, IoConfig, Layout, Semiring, SimDisk, SparseMatrix, Triple};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Exact,
    Mismatch,
    Unverified,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Exact => "exact",
            Verdict::Mismatch => "mismatch",
            Verdict::Unverified => "unverified",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome<S> {
    pub report: RunReport,
    /// Emitted entries in row-major order.
    pub output: Vec<Triple<S>>,
    pub verdict: Verdict,
    pub z_oracle: Option<usize>,
}

pub fn oracle_fits<S>(a: &CooMatrix<S>, c: &CooMatrix<S>) -> bool {
    a.dim <= ORACLE_MAX_DIM && a.entries.len() + c.entries.len() <= ORACLE_MAX_NNZ
}

/// Stores `a` and `c` in the layout their entry order already has, runs
/// `mode` and collects the output. Duplicate emissions are an error.
pub fn run_product<S: Semiring>(
    a: &CooMatrix<S>,
    c: &CooMatrix<S>,
    config: IoConfig,
    mode: Mode,
    seed: u64,
    verify: bool,
) -> Result<Outcome<S>, Error> {
    if a.dim != c.dim {
        return Err(Error::DimensionMismatch(a.dim, c.dim));
    }
    let disk: SimDisk<Triple<S>> = SimDisk::new(config);
    let sa = SparseMatrix::store(&disk, a, Layout::detect(&a.entries))?;
    let sc = SparseMatrix::store(&disk, c, Layout::detect(&c.entries))?;
    let mut output = Vec::new();
    let mut sink = EmitSink::with_ledger(|t: Triple<S>| {
        output.push(t);
        Ok(())
    });
    let report = multiply(&disk, &sa, &sc, &mut sink, mode, seed)?;
    drop(sink);
    output.sort_unstable_by_key(Triple::row_major_key);

    let (verdict, z_oracle) = if verify && oracle_fits(a, c) {
        let exact = oracle_multiply(a, c)?;
        let verdict = if exact.triples == output {
            Verdict::Exact
        } else {
            Verdict::Mismatch
        };
        (verdict, Some(exact.z()))
    } else {
        (Verdict::Unverified, None)
    };
    Ok(Outcome {
        report,
        output,
        verdict,
        z_oracle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ssmm_core::generate::gen_random;
    use ssmm_core::IntRing;

    #[test]
    fn naive_run_is_exact() {
        let a = gen_random::<IntRing>(30, 100, 1).unwrap();
        let c = gen_random::<IntRing>(30, 100, 2).unwrap();
        let out = run_product(&a, &c, IoConfig::new(256, 16).unwrap(), Mode::Naive, 0, true).unwrap();
        assert_eq!(out.verdict, Verdict::Exact);
        assert_eq!(out.z_oracle, Some(out.output.len()));
        let unchecked = run_product(&a, &c, IoConfig::new(256, 16).unwrap(), Mode::Naive, 0, false).unwrap();
        assert_eq!(unchecked.verdict, Verdict::Unverified);
        assert_eq!(unchecked.output, out.output);
    }
}
