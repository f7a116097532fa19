//! The `SSMM 1` text format for sparse matrices.
//!
//! ```text
//! SSMM 1
//! semiring int64
//! dim 3
//! nnz 2
//! 0 1 5
//! 2 0 -7
//! ```
//!
//! Indices are 0-based. The layout of a loaded matrix is read off the order
//! of its lines.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use ssmm_core::{Boolean, CooMatrix, IntRing, Semiring, Triple, Tropical};
use thiserror::Error;

pub const MAGIC: &str = "SSMM 1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown semiring `{0}`")]
    UnknownSemiring(String),
    #[error("header announces {expected} entries but the file has {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("semirings differ: {0} vs {1}")]
    SemiringMismatch(&'static str, &'static str),
    #[error(transparent)]
    Invalid(#[from] ssmm_core::Error),
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        message: message.into(),
    }
}

/// The semirings a file may name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SemiringKind {
    #[value(name = "int64")]
    Int64,
    #[value(name = "bool")]
    Bool,
    #[value(name = "tropical")]
    Tropical,
}

impl SemiringKind {
    pub fn name(self) -> &'static str {
        match self {
            SemiringKind::Int64 => IntRing::NAME,
            SemiringKind::Bool => Boolean::NAME,
            SemiringKind::Tropical => Tropical::NAME,
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [SemiringKind::Int64, SemiringKind::Bool, SemiringKind::Tropical]
            .into_iter()
            .find(|k| k.name() == name)
    }
}

/// A loaded matrix over whichever semiring its file named.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyMatrix {
    Int64(CooMatrix<IntRing>),
    Bool(CooMatrix<Boolean>),
    Tropical(CooMatrix<Tropical>),
}

impl AnyMatrix {
    pub fn kind(&self) -> SemiringKind {
        match self {
            AnyMatrix::Int64(_) => SemiringKind::Int64,
            AnyMatrix::Bool(_) => SemiringKind::Bool,
            AnyMatrix::Tropical(_) => SemiringKind::Tropical,
        }
    }
}

pub fn to_text<S: Semiring>(m: &CooMatrix<S>) -> String {
    let mut out = String::with_capacity(32 + 16 * m.nnz());
    writeln!(out, "{MAGIC}\nsemiring {}\ndim {}\nnnz {}", S::NAME, m.dim, m.nnz()).unwrap();
    for t in &m.entries {
        write!(out, "{} {} ", t.row, t.col).unwrap();
        t.value.write_literal(&mut out).unwrap();
        out.push('\n');
    }
    out
}

struct Header<'a> {
    semiring: &'a str,
    dim: u32,
    nnz: usize,
}

fn header_field<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<&'a str, FormatError> {
    let (n, line) = lines.next().ok_or_else(|| syntax(0, format!("missing `{key}` line")))?;
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .filter(|v| !v.is_empty() && !v.contains(' '))
        .ok_or_else(|| syntax(n, format!("expected `{key} <value>`")))
}

fn parse_header<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>) -> Result<Header<'a>, FormatError> {
    match lines.next() {
        Some((_, MAGIC)) => {}
        Some((n, _)) => return Err(syntax(n, format!("expected `{MAGIC}`"))),
        None => return Err(syntax(1, "empty file")),
    }
    let semiring = header_field(lines, "semiring")?;
    let dim = header_field(lines, "dim")?;
    let dim = dim.parse().map_err(|_| syntax(3, format!("bad dimension `{dim}`")))?;
    let nnz = header_field(lines, "nnz")?;
    let nnz = nnz.parse().map_err(|_| syntax(4, format!("bad entry count `{nnz}`")))?;
    Ok(Header { semiring, dim, nnz })
}

fn parse_entries<'a, S: Semiring>(
    header: &Header<'_>,
    lines: impl Iterator<Item = (usize, &'a str)>,
) -> Result<CooMatrix<S>, FormatError> {
    let mut entries = Vec::with_capacity(header.nnz);
    for (n, line) in lines {
        let mut parts = line.split(' ');
        let (Some(i), Some(j), Some(v), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(syntax(n, "expected `<i> <j> <v>`"));
        };
        let i = i.parse().map_err(|_| syntax(n, format!("bad row `{i}`")))?;
        let j = j.parse().map_err(|_| syntax(n, format!("bad column `{j}`")))?;
        let v = S::parse_literal(v).ok_or_else(|| syntax(n, format!("bad {} value `{v}`", S::NAME)))?;
        entries.push(Triple::new(i, j, v));
    }
    if entries.len() != header.nnz {
        return Err(FormatError::CountMismatch {
            expected: header.nnz,
            found: entries.len(),
        });
    }
    Ok(CooMatrix::new(header.dim, entries)?)
}

fn numbered(text: &str) -> Result<impl Iterator<Item = (usize, &str)>, FormatError> {
    let body = text
        .strip_suffix('\n')
        .ok_or_else(|| syntax(text.lines().count().max(1), "file must end with a newline"))?;
    Ok(body.split('\n').enumerate().map(|(n, l)| (n + 1, l)))
}

/// Parses a file that must name the semiring `S`.
pub fn from_text<S: Semiring>(text: &str) -> Result<CooMatrix<S>, FormatError> {
    let mut lines = numbered(text)?;
    let header = parse_header(&mut lines)?;
    if header.semiring != S::NAME {
        return match SemiringKind::from_name(header.semiring) {
            Some(kind) => Err(FormatError::SemiringMismatch(kind.name(), S::NAME)),
            None => Err(FormatError::UnknownSemiring(header.semiring.to_owned())),
        };
    }
    parse_entries(&header, lines)
}

/// Parses a file over any supported semiring.
pub fn from_text_any(text: &str) -> Result<AnyMatrix, FormatError> {
    let mut lines = numbered(text)?;
    let header = parse_header(&mut lines)?;
    match SemiringKind::from_name(header.semiring) {
        Some(SemiringKind::Int64) => Ok(AnyMatrix::Int64(parse_entries(&header, lines)?)),
        Some(SemiringKind::Bool) => Ok(AnyMatrix::Bool(parse_entries(&header, lines)?)),
        Some(SemiringKind::Tropical) => Ok(AnyMatrix::Tropical(parse_entries(&header, lines)?)),
        None => Err(FormatError::UnknownSemiring(header.semiring.to_owned())),
    }
}

fn io_error(path: &Path, source: io::Error) -> FormatError {
    FormatError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn load_any(path: &Path) -> Result<AnyMatrix, FormatError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    from_text_any(&text)
}

pub fn save<S: Semiring>(path: &Path, m: &CooMatrix<S>) -> Result<(), FormatError> {
    fs::write(path, to_text(m)).map_err(|e| io_error(path, e))
}
