//! External-memory sparse matrix multiplication over semirings, measured on
//! a simulated two-level memory that counts block transfers.

#![no_std]

extern crate alloc;

pub mod cmm;
pub mod coloring;
pub mod constants;
pub mod driver;
pub mod dvspmm;
pub mod error;
pub mod generate;
pub mod hashing;
pub mod io;
pub mod matrix;
pub mod oracle;
pub mod semiring;
pub mod sketch;

pub use error::Error;
pub use io::{IoConfig, IoTally, SimDisk};
pub use matrix::{CooMatrix, Layout, SparseMatrix, Triple};
pub use semiring::{nat_scale, Boolean, IntRing, Semiring, Tropical};
