//! Turbo signal recovery (TSR) and AMP for compressed sensing with partial
//! DFT sensing matrices, with the scalar state-evolution recursions that
//! predict their per-iteration MSE.

// `!(x > 0.0)` style checks are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amp;
pub mod denoiser;
pub mod error;
pub mod harness;
pub mod model;
pub mod quadrature;
pub mod rng;
pub mod state_evolution;
pub mod trace;
pub mod tsr;

pub use error::{Error, Result};
pub use trace::{IterationDetail, IterationRecord, RecoveryTrace, StopReason};
