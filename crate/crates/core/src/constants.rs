//! Frozen tuning constants.
//!
//! `KAPPA` comes from the `calibrate` program of the command-line crate:
//! 10^4 trials per side at `F0 = (1 -+ eps) T` for `T` in {4, 16, 64},
//! `eps = 0.25`, `U = 1024`. Offsets from -0.25 to +0.35 made no error at
//! all; the value is the middle of that range.

/// Offset of the nonzero-fraction threshold, in units of `eps`.
pub const KAPPA: f64 = 0.05;

/// Default multiplier of `eps^-2 ln(1/delta)` in the sketch row count.
pub const D_CONSTANT: f64 = 6.0;

/// Row-count multiplier used by the coloring's estimates. These only steer
/// balance, so they can be far coarser than a stand-alone estimate.
pub const COLORING_D_CONSTANT: f64 = 0.25;

/// Row-count multiplier for the total estimate that sizes the coloring.
pub const MONTE_CARLO_D_CONSTANT: f64 = 0.25;
