//! Desk-scale laboratory for decentralized data-parallel training.
//!
//! The crate is split along the lines of the simulated system:
//!
//! - [`common`]: keyed deterministic randomness, dense parameter vectors and
//!   the truncated-normal workload-noise sampler.
//! - [`topology`]: time-varying gossip schedules (complete, one-peer ring,
//!   one-peer exponential, alternating exponential ring), mixing analysis and
//!   consensus simulation.
//! - [`problems`]: small differentiable objectives with stochastic gradient
//!   oracles and analytic smoothness / gradient bounds.
//! - [`optim`]: per-worker update rules (decentralized Adam, All-Reduce Adam,
//!   accumulated decentralized Adam, decentralized SGD).
//! - [`trainsim`]: multi-worker simulated training and convergence-bound
//!   evaluation.
//! - [`runtimemodel`]: discrete-event per-iteration runtime recurrences for
//!   All-Reduce, decentralized and node-grouped (SGP-style) training.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod common;
pub mod error;
pub mod optim;
pub mod problems;
pub mod runtimemodel;
pub mod topology;
pub mod trainsim;

pub use error::{Error, Result};
