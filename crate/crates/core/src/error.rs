use thiserror::Error;

use crate::matrix::Layout;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("n-fold addition needs n >= 1")]
    ZeroMultiplier,
    #[error("invalid I/O configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("block {0} was never written or has been released")]
    UnknownBlock(usize),
    #[error("writing block {index} would leave a gap (disk has {len} blocks)")]
    BlockGap { index: usize, len: usize },
    #[error("block payload of {len} records exceeds block size {block}")]
    OversizedBlock { len: usize, block: usize },
    #[error("internal memory exceeded: {requested} words requested, {in_use} of {capacity} in use")]
    BudgetExceeded {
        requested: usize,
        in_use: usize,
        capacity: usize,
    },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(u32, u32),
    #[error("entry ({row}, {col}) is outside dimension {dim}")]
    IndexOutOfRange { row: u32, col: u32, dim: u32 },
    #[error("entry ({row}, {col}) stores the semiring zero")]
    ZeroEntry { row: u32, col: u32 },
    #[error("duplicate entry ({row}, {col})")]
    DuplicateEntry { row: u32, col: u32 },
    #[error("expected layout {expected:?}, found {found:?}")]
    LayoutMismatch { expected: Layout, found: Layout },
    #[error("invalid instance shape: {0}")]
    InvalidShape(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("entry ({row}, {col}) was emitted twice")]
    DuplicateEmission { row: u32, col: u32 },
    #[error("oracle limits exceeded (dimension {dim}, {nnz} entries)")]
    OracleLimit { dim: u32, nnz: usize },
}
