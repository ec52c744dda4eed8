//! Sum-rate maximization for a transmissive BD-RIS mounted on a LEO
//! satellite serving two downlink NOMA users.
//!
//! The optimizer alternates a closed-form KKT power split with a
//! semidefinite-relaxed phase design solved by Frank-Wolfe, and the `sim`
//! module runs Monte Carlo sweeps against a fixed-split benchmark.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod noma;
pub mod numerics;
pub mod optimizer;
pub mod parallel;
pub mod phase;
pub mod sim;
pub mod tolerance;

pub use error::{Error, Result};
