//! Benchmark grids and their CSV rows.

use std::io::Write;

use ssmm_core::driver::Mode;
use ssmm_core::generate::{gen_cancellation_instance, gen_hard_instance, gen_random};
use ssmm_core::hashing::derive_seed;
use ssmm_core::{CooMatrix, Error, IntRing, IoConfig};

use crate::run::run_product;

pub const CSV_HEADER: [&str; 14] = [
    "seed",
    "algo",
    "U",
    "N",
    "Z_oracle",
    "Z_hat",
    "M",
    "B",
    "io_reads",
    "io_writes",
    "io_total",
    "bound_naive",
    "bound_cmm",
    "correct",
];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub seed: u64,
    pub algo: &'static str,
    pub dim: u32,
    pub n: usize,
    pub z_oracle: Option<usize>,
    pub z_hat: Option<f64>,
    pub memory: usize,
    pub block: usize,
    pub io_reads: u64,
    pub io_writes: u64,
    pub bound_naive: f64,
    pub bound_cmm: f64,
    pub correct: &'static str,
}

impl BenchRow {
    pub fn io_total(&self) -> u64 {
        self.io_reads + self.io_writes
    }

    pub fn record(&self) -> [String; 14] {
        let opt = |v: Option<String>| v.unwrap_or_default();
        [
            self.seed.to_string(),
            self.algo.to_owned(),
            self.dim.to_string(),
            self.n.to_string(),
            opt(self.z_oracle.map(|z| z.to_string())),
            opt(self.z_hat.map(|z| format!("{z:.3}"))),
            self.memory.to_string(),
            self.block.to_string(),
            self.io_reads.to_string(),
            self.io_writes.to_string(),
            self.io_total().to_string(),
            format!("{:.3}", self.bound_naive),
            format!("{:.3}", self.bound_cmm),
            self.correct.to_owned(),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceSpec {
    /// `n` entries per matrix, `z` output entries.
    Hard { n: usize, z: usize },
    Random { dim: u32, nnz: usize },
    Cancel { dim: u32, pairs: usize },
}

impl InstanceSpec {
    pub fn generate(self, seed: u64) -> Result<(CooMatrix<IntRing>, CooMatrix<IntRing>), Error> {
        match self {
            InstanceSpec::Hard { n, z } => gen_hard_instance(n, z, seed),
            InstanceSpec::Random { dim, nnz } => Ok((
                gen_random(dim, nnz, seed)?,
                gen_random(dim, nnz, derive_seed(seed, 1))?,
            )),
            InstanceSpec::Cancel { dim, pairs } => {
                let inst = gen_cancellation_instance(dim, pairs, seed)?;
                Ok((inst.a, inst.c))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    pub instances: Vec<InstanceSpec>,
    pub memories: Vec<usize>,
    pub blocks: Vec<usize>,
    pub modes: Vec<Mode>,
    pub seeds: Vec<u64>,
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Auto => "auto",
        Mode::Naive => "naive",
        Mode::Cmm => "cmm",
    }
}

/// Runs every grid point in order: instance, then `M`, `B`, mode, seed.
pub fn run_grid(grid: &Grid, mut each: impl FnMut(BenchRow) -> Result<(), Error>) -> Result<(), Error> {
    for &spec in &grid.instances {
        for &memory in &grid.memories {
            for &block in &grid.blocks {
                let config = IoConfig::new(memory, block)?;
                for &mode in &grid.modes {
                    for &seed in &grid.seeds {
                        let (a, c) = spec.generate(seed)?;
                        let out = run_product(&a, &c, config, mode, seed, true)?;
                        let rep = out.report;
                        each(BenchRow {
                            seed,
                            algo: rep.algorithm.name(),
                            dim: rep.dim,
                            n: rep.n,
                            z_oracle: out.z_oracle,
                            z_hat: rep.z_hat,
                            memory,
                            block,
                            io_reads: rep.tally.reads,
                            io_writes: rep.tally.writes,
                            bound_naive: rep.bound_naive(),
                            bound_cmm: rep.bound_cmm(),
                            correct: out.verdict.as_str(),
                        })?;
                    }
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Run(#[from] Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Writes the header and one row per grid point.
pub fn write_csv<W: Write>(grid: &Grid, out: W) -> Result<Vec<BenchRow>, BenchError> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER)?;
    let mut rows = Vec::new();
    let mut failure = None;
    run_grid(grid, |row| {
        if let Err(e) = writer.write_record(row.record()) {
            failure = Some(e);
            return Err(Error::InvalidParameter("csv output failed"));
        }
        rows.push(row);
        Ok(())
    })
    .map_err(|e| failure.take().map_or(BenchError::Run(e), BenchError::Csv))?;
    writer.flush().map_err(csv::Error::from)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_grid_is_header_only() {
        let grid = Grid {
            instances: vec![InstanceSpec::Hard { n: 1024, z: 256 }],
            memories: vec![1024],
            blocks: vec![64],
            modes: vec![Mode::Naive],
            seeds: vec![],
        };
        let mut out = Vec::new();
        assert!(write_csv(&grid, &mut out).unwrap().is_empty());
        assert_eq!(String::from_utf8(out).unwrap(), CSV_HEADER.join(",") + "\n");
    }

    #[test]
    fn naive_io_falls_with_memory() {
        let grid = Grid {
            instances: vec![InstanceSpec::Hard { n: 4096, z: 256 }],
            memories: vec![1024, 2048, 4096],
            blocks: vec![64],
            modes: vec![Mode::Naive],
            seeds: vec![3],
        };
        let mut out = Vec::new();
        let rows = write_csv(&grid, &mut out).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.windows(2).all(|w| w[0].io_total() > w[1].io_total()));
        assert!(rows.iter().all(|r| r.correct == "exact" && r.z_oracle == Some(256)));
        let again = write_csv(&grid, Vec::new()).unwrap();
        assert_eq!(again, rows);
    }
}
