//! Multi-worker simulated training and convergence-bound evaluation.

mod bounds;
mod check;
mod tau;
mod trainer;

pub use bounds::{evaluate_theorem1_bound, evaluate_theorem2_bound, BoundInputs, BoundReport, Theorem};
pub use check::{check_bound, BoundCheck, TauMode};
pub use tau::{sample_tau, tau_distribution};
pub use trainer::{
    run_training, BatchMode, InitialModels, MetricsLog, TrainConfig, Trainer,
};
