//! Equilibria of a two-player (and N-player) stopping game in which each
//! player buys Poisson information about a binary state before choosing a
//! risky action `R` or a safe action `S`, and the first `R` taker earns a
//! premium.
//!
//! The crate is `no_std` with `alloc`. Everything is pure and deterministic;
//! the simulator draws from seeded ChaCha substreams.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod cutoffs;
pub mod equilibrium;
mod error;
pub mod extensions;
pub mod model;
pub mod numerics;
pub mod ode;
pub mod simulator;
pub mod single_dm;
pub mod strategy;
pub mod two_period;
pub mod verifier;

pub use error::{Error, Result};
pub use model::{Competition, ModelParams, RawParams};
pub use numerics::Controls;
