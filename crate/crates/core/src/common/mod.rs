//! Shared plumbing: keyed randomness, parameter vectors and the
//! workload-noise sampler used by the runtime model.

mod noise;
mod rng;
mod vector;

pub use noise::{sample_speed_multiplier, SPEED_MAX, SPEED_MIN};
pub use rng::{Purpose, StreamKey, StreamRng};
pub use vector::ParamVector;
