use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ssmm::bench::{write_csv, BenchRow, Grid, InstanceSpec, CSV_HEADER};
use ssmm::format::{self, AnyMatrix, FormatError, SemiringKind};
use ssmm::run::{run_product, Verdict};
use ssmm_core::driver::Mode;
use ssmm_core::generate::{gen_cancellation_instance, gen_hard_instance, gen_random, SampleValue};
use ssmm_core::hashing::derive_seed;
use ssmm_core::matrix::Disk;
use ssmm_core::sketch::{estimate_columns, SketchParams};
use ssmm_core::{Boolean, CooMatrix, IntRing, IoConfig, Layout, Semiring, SparseMatrix, Tropical};

const EXIT_USAGE: u8 = 2;
const EXIT_MISMATCH: u8 = 3;

#[derive(Parser)]
#[command(name = "ssmm", version, about = "External-memory sparse matrix multiplication over semirings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a pair of matrix files
    Gen(GenArgs),
    /// Multiply two matrix files on the simulated disk
    Multiply(MultiplyArgs),
    /// Estimate the number of nonzeros of a product
    Estimate(EstimateArgs),
    /// Run a grid of instances and write one CSV row per run
    Bench(BenchArgs),
}

#[derive(Args)]
struct SeedArg {
    /// Random seed [default: $SSMM_SEED or 0]
    #[arg(long, env = "SSMM_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    kind: GenKind,
    /// Output file for A
    #[arg(long, global = true, default_value = "A.ssmm")]
    a_out: PathBuf,
    /// Output file for C
    #[arg(long, global = true, default_value = "C.ssmm")]
    c_out: PathBuf,
}

#[derive(Subcommand)]
enum GenKind {
    /// Dense sqrt(Z) x N/sqrt(Z) times N/sqrt(Z) x sqrt(Z)
    Hard {
        /// Entries per matrix
        #[arg(long = "N")]
        n: usize,
        /// Entries of the product
        #[arg(long = "Z")]
        z: usize,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Uniformly placed entries
    Random {
        #[arg(long = "U")]
        dim: u32,
        #[arg(long)]
        nnz: usize,
        #[arg(long, value_enum, default_value_t = SemiringKind::Int64)]
        semiring: SemiringKind,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Integer instance with cancelling inner products
    Cancel {
        #[arg(long = "U")]
        dim: u32,
        #[arg(long)]
        pairs: usize,
        #[command(flatten)]
        seed: SeedArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Auto,
    Naive,
    Cmm,
}

impl From<Algo> for Mode {
    fn from(a: Algo) -> Mode {
        match a {
            Algo::Auto => Mode::Auto,
            Algo::Naive => Mode::Naive,
            Algo::Cmm => Mode::Cmm,
        }
    }
}

#[derive(Args)]
struct MachineArgs {
    /// Internal memory in words
    #[arg(long = "M", default_value_t = 1 << 12)]
    memory: usize,
    /// Block size in words
    #[arg(long = "B", default_value_t = 64)]
    block: usize,
}

#[derive(Args)]
struct MultiplyArgs {
    a: PathBuf,
    c: PathBuf,
    #[command(flatten)]
    machine: MachineArgs,
    #[arg(long, value_enum, default_value_t = Algo::Auto)]
    algo: Algo,
    #[command(flatten)]
    seed: SeedArg,
    /// Compare the output with the in-memory oracle
    #[arg(long)]
    verify: bool,
    /// Write the report as a CSV row (with header) to this file
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the product to this matrix file
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    a: PathBuf,
    c: PathBuf,
    #[command(flatten)]
    machine: MachineArgs,
    /// Relative accuracy, strictly between 0 and 1
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    /// Failure probability in (0, 1]
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[command(flatten)]
    seed: SeedArg,
    /// Also print `col,z_hat` for every column
    #[arg(long)]
    columns: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchKind {
    Hard,
    Random,
    Cancel,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    kind: BenchKind,
    /// Entries per matrix (hard)
    #[arg(long = "N", value_delimiter = ',')]
    n: Vec<usize>,
    /// Product entries (hard)
    #[arg(long = "Z", value_delimiter = ',')]
    z: Vec<usize>,
    /// Dimension (random, cancel)
    #[arg(long = "U", value_delimiter = ',')]
    dim: Vec<u32>,
    /// Entries per matrix (random)
    #[arg(long, value_delimiter = ',')]
    nnz: Vec<usize>,
    /// Cancelling pairs (cancel)
    #[arg(long, value_delimiter = ',')]
    pairs: Vec<usize>,
    #[arg(long = "M", value_delimiter = ',', default_value = "4096")]
    memory: Vec<usize>,
    #[arg(long = "B", value_delimiter = ',', default_value = "64")]
    block: Vec<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "naive,cmm")]
    algo: Vec<Algo>,
    /// Seeds as a list `1,2,3` or a range `0..10`; empty for no runs
    #[arg(long, default_value = "0")]
    seeds: String,
    /// CSV destination [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Io { .. } => Failure::Runtime(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<ssmm_core::Error> for Failure {
    fn from(e: ssmm_core::Error) -> Self {
        use ssmm_core::Error::*;
        match e {
            InvalidConfig(_) | InvalidShape(_) | InvalidParameter(_) | DimensionMismatch(..) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Multiply(args) => cmd_multiply(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn write_pair<S: Semiring>(args: &GenArgs, a: &CooMatrix<S>, c: &CooMatrix<S>) -> Result<ExitCode, Failure> {
    format::save(&args.a_out, a)?;
    format::save(&args.c_out, c)?;
    println!(
        "wrote {} ({} entries) and {} ({} entries), dim {}",
        args.a_out.display(),
        a.nnz(),
        args.c_out.display(),
        c.nnz(),
        a.dim
    );
    Ok(ExitCode::SUCCESS)
}

fn random_pair<S: SampleValue>(args: &GenArgs, dim: u32, nnz: usize, seed: u64) -> Result<ExitCode, Failure> {
    let a = gen_random::<S>(dim, nnz, seed)?;
    let c = gen_random::<S>(dim, nnz, derive_seed(seed, 1))?;
    write_pair(args, &a, &c)
}

fn cmd_gen(args: GenArgs) -> Result<ExitCode, Failure> {
    match args.kind {
        GenKind::Hard { n, z, ref seed } => {
            let (a, c) = gen_hard_instance::<IntRing>(n, z, seed.seed)?;
            write_pair(&args, &a, &c)
        }
        GenKind::Random { dim, nnz, semiring, ref seed } => match semiring {
            SemiringKind::Int64 => random_pair::<IntRing>(&args, dim, nnz, seed.seed),
            SemiringKind::Bool => random_pair::<Boolean>(&args, dim, nnz, seed.seed),
            SemiringKind::Tropical => random_pair::<Tropical>(&args, dim, nnz, seed.seed),
        },
        GenKind::Cancel { dim, pairs, ref seed } => {
            let inst = gen_cancellation_instance(dim, pairs, seed.seed)?;
            write_pair(&args, &inst.a, &inst.c)
        }
    }
}

fn load_pair(a: &Path, c: &Path) -> Result<(AnyMatrix, AnyMatrix), Failure> {
    let a = format::load_any(a)?;
    let c = format::load_any(c)?;
    if a.kind() != c.kind() {
        return Err(FormatError::SemiringMismatch(a.kind().name(), c.kind().name()).into());
    }
    Ok((a, c))
}

/// Calls `$body` with `$a` and `$c` bound to matrices over the same semiring.
macro_rules! with_pair {
    ($pair:expr, |$a:ident, $c:ident| $body:expr) => {
        match $pair {
            (AnyMatrix::Int64($a), AnyMatrix::Int64($c)) => $body,
            (AnyMatrix::Bool($a), AnyMatrix::Bool($c)) => $body,
            (AnyMatrix::Tropical($a), AnyMatrix::Tropical($c)) => $body,
            _ => unreachable!("load_pair checks the semirings"),
        }
    };
}

fn cmd_multiply(args: MultiplyArgs) -> Result<ExitCode, Failure> {
    let pair = load_pair(&args.a, &args.c)?;
    with_pair!(pair, |a, c| multiply_typed(&args, &a, &c))
}

fn multiply_typed<S: Semiring>(args: &MultiplyArgs, a: &CooMatrix<S>, c: &CooMatrix<S>) -> Result<ExitCode, Failure> {
    let config = IoConfig::new(args.machine.memory, args.machine.block)?;
    let out = run_product(a, c, config, args.algo.into(), args.seed.seed, args.verify)?;
    let rep = &out.report;
    println!("algorithm   {}", rep.algorithm.name());
    if let Some(sel) = rep.selection {
        println!("selection   {sel:?}");
    }
    println!("U           {}", rep.dim);
    println!("N           {}", rep.n);
    if let Some(z) = rep.z_hat {
        println!("Z_hat       {z:.3}");
    }
    println!("emitted     {}", rep.emitted);
    println!("colors      {}", rep.colors);
    println!("subproblems {}", rep.subproblems);
    println!("io_reads    {}", rep.tally.reads);
    println!("io_writes   {}", rep.tally.writes);
    println!("io_total    {}", rep.tally.total());
    println!("bound_naive {:.3}", rep.bound_naive());
    println!("bound_cmm   {:.3}", rep.bound_cmm());
    println!("confident   {}", rep.success);
    if args.verify && out.verdict == Verdict::Unverified {
        println!("verify      skipped: instance exceeds oracle limits");
    }
    println!("correct     {}", out.verdict.as_str());

    if let Some(path) = &args.out {
        format::save(path, &CooMatrix::new(a.dim, out.output.clone())?)?;
    }
    if let Some(path) = &args.csv {
        let row = BenchRow {
            seed: args.seed.seed,
            algo: rep.algorithm.name(),
            dim: rep.dim,
            n: rep.n,
            z_oracle: out.z_oracle,
            z_hat: rep.z_hat,
            memory: args.machine.memory,
            block: args.machine.block,
            io_reads: rep.tally.reads,
            io_writes: rep.tally.writes,
            bound_naive: rep.bound_naive(),
            bound_cmm: rep.bound_cmm(),
            correct: out.verdict.as_str(),
        };
        let mut w = csv::Writer::from_writer(File::create(path)?);
        w.write_record(CSV_HEADER).map_err(|e| Failure::Runtime(e.to_string()))?;
        w.write_record(row.record()).map_err(|e| Failure::Runtime(e.to_string()))?;
        w.flush()?;
    }
    Ok(if out.verdict == Verdict::Mismatch {
        ExitCode::from(EXIT_MISMATCH)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_estimate(args: EstimateArgs) -> Result<ExitCode, Failure> {
    if !(args.eps > 0.0 && args.eps < 1.0) {
        return Err(Failure::Usage(format!("eps must lie strictly between 0 and 1, got {}", args.eps)));
    }
    let params = SketchParams::new(args.eps, args.delta)?;
    let pair = load_pair(&args.a, &args.c)?;
    with_pair!(pair, |a, c| estimate_typed(&args, &params, &a, &c))
}

fn estimate_typed<S: Semiring>(
    args: &EstimateArgs,
    params: &SketchParams,
    a: &CooMatrix<S>,
    c: &CooMatrix<S>,
) -> Result<ExitCode, Failure> {
    if a.dim != c.dim {
        return Err(ssmm_core::Error::DimensionMismatch(a.dim, c.dim).into());
    }
    let disk: Disk<S> = Disk::new(IoConfig::new(args.machine.memory, args.machine.block)?);
    let sa = SparseMatrix::store(&disk, a, Layout::detect(&a.entries))?;
    let sc = SparseMatrix::store(&disk, c, Layout::detect(&c.entries))?;
    let est = estimate_columns(&disk, &sa, &sc, params, args.seed.seed)?;
    println!("Z_hat {:.3}", est.total());
    println!("io_total {}", disk.tally().total());
    if args.columns {
        let mut out = io::stdout().lock();
        writeln!(out, "col,z_hat")?;
        for (j, z) in est.z_hat.iter().enumerate() {
            writeln!(out, "{j},{z:.3}")?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_seeds(text: &str) -> Result<Vec<u64>, Failure> {
    let bad = || Failure::Usage(format!("bad seed list `{text}`"));
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: u64 = lo.parse().map_err(|_| bad())?;
        let hi: u64 = hi.parse().map_err(|_| bad())?;
        return Ok((lo..hi).collect());
    }
    text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode, Failure> {
    let missing = |flag: &str| Failure::Usage(format!("this kind needs --{flag}"));
    let instances: Vec<InstanceSpec> = match args.kind {
        BenchKind::Hard => {
            if args.n.is_empty() || args.z.is_empty() {
                return Err(missing("N and --Z"));
            }
            let z = &args.z;
            args.n.iter().flat_map(|&n| z.iter().map(move |&z| InstanceSpec::Hard { n, z })).collect()
        }
        BenchKind::Random => {
            if args.dim.is_empty() || args.nnz.is_empty() {
                return Err(missing("U and --nnz"));
            }
            let nnz = &args.nnz;
            args.dim.iter().flat_map(|&dim| nnz.iter().map(move |&nnz| InstanceSpec::Random { dim, nnz })).collect()
        }
        BenchKind::Cancel => {
            if args.dim.is_empty() || args.pairs.is_empty() {
                return Err(missing("U and --pairs"));
            }
            let pairs = &args.pairs;
            args.dim.iter().flat_map(|&dim| pairs.iter().map(move |&pairs| InstanceSpec::Cancel { dim, pairs })).collect()
        }
    };
    let grid = Grid {
        instances,
        memories: args.memory,
        blocks: args.block,
        modes: args.algo.into_iter().map(Mode::from).collect(),
        seeds: parse_seeds(&args.seeds)?,
    };
    let result = match &args.out {
        Some(path) => write_csv(&grid, File::create(path)?),
        None => write_csv(&grid, io::stdout().lock()),
    };
    let rows = result.map_err(|e| match e {
        ssmm::bench::BenchError::Run(e) => Failure::from(e),
        other => Failure::Runtime(other.to_string()),
    })?;
    let mismatches = rows.iter().filter(|r| r.correct == Verdict::Mismatch.as_str()).count();
    if mismatches > 0 {
        eprintln!("{mismatches} of {} runs did not match the oracle", rows.len());
    }
    Ok(ExitCode::SUCCESS)
}
