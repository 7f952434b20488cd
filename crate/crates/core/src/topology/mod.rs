//! Gossip communication schedules and their mixing behaviour.
//!
//! A [`MixingSchedule`] is a periodic sequence of symmetric doubly stochastic
//! [`MixingMatrix`] rounds. Builders cover the complete graph, the one-peer
//! ring, the one-peer exponential graph and the alternating exponential ring
//! (AER), which alternates intra-node group averaging with merged averaging
//! over exponentially spaced node pairs.

mod builders;
mod consensus;
mod matrix;
mod schedule;
mod spectral;

pub use builders::{make_aer, make_complete, make_one_peer_exponential, make_one_peer_ring};
pub(crate) use consensus::dispersion;
pub use consensus::{gossip_consensus, ConsensusTrajectory};
pub use matrix::{validate, MixingMatrix, ValidationReport, STOCHASTIC_TOL};
pub use schedule::{MixingSchedule, TopologyKind};
pub use spectral::{effective_lambda, spectral_lambda};
