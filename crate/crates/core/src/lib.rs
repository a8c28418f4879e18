//! Diversity analysis of linear MMSE and zero-forcing MIMO receivers.
//!
//! The crate pairs closed-form diversity orders ([`formulas`]) with a
//! deterministic Monte Carlo engine ([`simkit`]) and log-log slope fitting
//! ([`fitters`]), so every closed form can be checked against simulated
//! outage and error curves. Channel models cover flat Rayleigh fading, the
//! multiple-access channel and frequency-selective channels with zero-padded
//! or cyclic-prefix block transmission ([`channels`]).
//!
//! See the `examples/` directory for one runnable program per capability and
//! the `mdl` binary for the JSON-driven experiment runner.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod cli;
pub mod error;
pub mod fitters;
pub mod formulas;
pub mod numkernel;
pub mod receivers;
pub mod simkit;
pub mod verify;

pub use error::{Error, Result};
