//! Compute-equivalent-gain analysis toolkit.
//!
//! Ingests model/benchmark/enhancement evaluation records, accounts
//! training and inference compute, and emits CEG estimates (bounds,
//! rough points, interpolated and fitted values) plus cost profiles and
//! report tables. See the `ceg-kit` binary for the command-line surface.

pub mod ceg;
pub mod compute;
pub mod cost;
pub mod estimate;
pub mod registry;
pub mod report;
pub mod scaling;
pub mod synth;
