//! Approximate dynamic programming over monotone piecewise constant functions.
//!
//! DP tables whose rows are monotone can be stored as piecewise constant
//! functions with few pieces instead of dense arrays. This crate provides
//! the function representation and its operations (minimum, shift, addition,
//! rounding, and several flavors of (min,+)-convolution), a generic engine
//! for evaluating and incrementally updating such DPs over a dependency DAG,
//! and four complete solvers built on top of it:
//!
//! * [`knapsack`] — fully dynamic 0-1 knapsack (convolution tree and the
//!   layered price-class variant),
//! * [`partition`] — k-balanced partitioning on (binarized) trees,
//! * [`ssl`] — simultaneous source location on trees,
//! * [`necklace`] — additive-error ℓ∞-necklace alignment.
//!
//! The [`oracles`] module holds deliberately simple exponential-time
//! reference implementations used throughout the test suites.
//!
//! With the `parallel` feature (default) the embarrassingly parallel inner
//! loops (per-signature row computation, level-wise tree builds) run on
//! rayon; without it the same code paths run sequentially.

pub mod engine;
pub mod knapsack;
// pub mod necklace;
pub mod oracles;
pub(crate) mod par;
// pub mod partition;
pub mod pcf;
// pub mod ssl;
pub mod textio;
pub(crate) mod util;

pub use pcf::{ExtValue, Monotonicity, Pcf, PcfError, RoundingConfig};
