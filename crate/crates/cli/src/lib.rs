//! File format, benchmark harness and command-line front end for
//! `ssmm-core`.

pub mod bench;
pub mod format;
pub mod run;

pub use ssmm_core as core;
