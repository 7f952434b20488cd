//! Discrete-event model of per-iteration training time.
//!
//! Each worker runs a forward pass, a bucketed backward pass, per-bucket
//! communication and updates; the simulators compute the completion time of
//! every task from its dependencies. Compute times are scaled by random
//! speed multipliers drawn once per `(worker, iteration)` and shared between
//! the All-Reduce, decentralized and intra-node coupled models.

mod params;
mod simulate;
mod speedup;
mod timeline;

pub use params::{ForwardMode, RuntimeParams, SpeedDraws};
pub use simulate::{simulate_allreduce, simulate_decentralized, simulate_sgp_variant};
pub use speedup::{
    closed_form_speedup, monte_carlo_speedup, replicate_runtimes, write_sweep_csv, MeanCi,
    ReplicateRuntimes, SpeedupEstimate, SweepRow,
};
pub use timeline::{export_timeline, SimMode, TaskBar, TaskKind, Timeline};
