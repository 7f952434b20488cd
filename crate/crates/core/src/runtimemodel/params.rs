use std::fmt;
use std::str::FromStr;

use crate::common::{sample_speed_multiplier, Purpose, StreamRng};
use crate::error::{Error, Result};

/// Cost of the forward pass in the two dependency models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForwardMode {
    /// All-Reduce forward takes `b/N`, decentralized forward takes `1/N`,
    /// so per-iteration forward work differs between the two models.
    #[default]
    Asymmetric,
    /// Both forwards take `b/N`; this is the accounting under which the
    /// closed-form speedup is exact.
    Normalized,
}

impl ForwardMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ForwardMode::Asymmetric => "asymmetric",
            ForwardMode::Normalized => "normalized",
        }
    }
}

impl fmt::Display for ForwardMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ForwardMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "asymmetric" => Ok(ForwardMode::Asymmetric),
            "normalized" => Ok(ForwardMode::Normalized),
            other => Err(Error::param(format!(
                "unknown forward mode {other:?} (expected asymmetric or normalized)"
            ))),
        }
    }
}

/// Parameters of the per-iteration runtime model. Time is measured in units
/// of one forward pass over the global batch on a single worker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuntimeParams {
    pub workers: usize,
    pub buckets: usize,
    /// Update time of one bucket.
    pub theta: f64,
    /// All-Reduce time of one bucket.
    pub gamma: f64,
    /// Decentralized round time as a fraction of `gamma`.
    pub omega: f64,
    /// Variance of the truncated-normal speed multipliers.
    pub sigma2: f64,
    /// Node size for the intra-node coupled variant.
    pub workers_per_node: usize,
    pub allow_omega_above_one: bool,
    pub forward: ForwardMode,
    /// Replaces `N` in the compute terms (`b/N`, `1/N`, `2/N`). Setting it to
    /// a constant keeps per-worker work fixed while `N` varies.
    pub work_divisor: Option<f64>,
}

impl Default for RuntimeParams {
    fn default() -> Self {
        Self {
            workers: 8,
            buckets: 4,
            theta: 0.2,
            gamma: 0.1,
            omega: 1.0,
            sigma2: 0.0,
            workers_per_node: 1,
            allow_omega_above_one: false,
            forward: ForwardMode::Asymmetric,
            work_divisor: None,
        }
    }
}

impl RuntimeParams {
    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::param("need at least one worker"));
        }
        if self.buckets == 0 {
            return Err(Error::param("need at least one bucket"));
        }
        let nonneg = [("theta", self.theta), ("gamma", self.gamma), ("sigma2", self.sigma2)];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::param(format!("omega must be positive, got {}", self.omega)));
        }
        if self.omega > 1.0 && !self.allow_omega_above_one {
            return Err(Error::param(format!(
                "omega = {} > 1; All-Reduce is always preferable there (set the override to simulate anyway)",
                self.omega
            )));
        }
        if self.workers_per_node == 0 || !self.workers.is_multiple_of(self.workers_per_node) {
            return Err(Error::param(format!(
                "workers_per_node = {} must divide N = {}",
                self.workers_per_node, self.workers
            )));
        }
        if let Some(d) = self.work_divisor {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::param(format!("work divisor must be positive, got {d}")));
            }
        }
        Ok(())
    }

    fn divisor(&self) -> f64 {
        self.work_divisor.unwrap_or(self.workers as f64)
    }

    /// Forward time (before the speed multiplier) in All-Reduce training.
    pub fn allreduce_forward(&self) -> f64 {
        self.buckets as f64 / self.divisor()
    }

    /// Forward time (before the speed multiplier) in decentralized training.
    pub fn decentralized_forward(&self) -> f64 {
        match self.forward {
            ForwardMode::Asymmetric => 1.0 / self.divisor(),
            ForwardMode::Normalized => self.allreduce_forward(),
        }
    }

    /// Backward time of one bucket (before the speed multiplier).
    pub fn bucket_backward(&self) -> f64 {
        2.0 / self.divisor()
    }

    /// Decentralized communication time of one bucket.
    pub fn gossip_time(&self) -> f64 {
        self.omega * self.gamma
    }
}

/// Speed multipliers `p^(i,t)` shared by all simulated modes of one
/// replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedDraws {
    workers: usize,
    iterations: usize,
    values: Vec<f64>,
}

impl SpeedDraws {
    /// All multipliers equal to one.
    pub fn constant(workers: usize, iterations: usize) -> Self {
        Self {
            workers,
            iterations,
            values: vec![1.0; workers * iterations],
        }
    }

    /// Draw `p^(i,t)` from a stream keyed by `(seed, worker, iteration)`.
    pub fn sample(seed: u64, workers: usize, iterations: usize, sigma2: f64) -> Result<Self> {
        let mut values = Vec::with_capacity(workers * iterations);
        for t in 1..=iterations {
            for i in 0..workers {
                let mut rng = StreamRng::keyed(seed, Purpose::SpeedMultiplier, i, t);
                values.push(sample_speed_multiplier(&mut rng, sigma2)?);
            }
        }
        Ok(Self {
            workers,
            iterations,
            values,
        })
    }

    /// `values[(t - 1) * workers + i]`.
    pub fn from_values(workers: usize, iterations: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != workers * iterations {
            return Err(Error::LengthMismatch {
                expected: workers * iterations,
                found: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::param(format!("speed multipliers must be positive, got {v}")));
        }
        Ok(Self {
            workers,
            iterations,
            values,
        })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// `p^(i,t)` with 1-based `t`.
    pub fn get(&self, worker: usize, t: usize) -> f64 {
        self.values[(t - 1) * self.workers + worker]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_override() {
        let p = RuntimeParams {
            omega: 1.5,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = RuntimeParams {
            allow_omega_above_one: true,
            ..p
        };
        assert!(p.validate().is_ok());
    }

    #[test]
    fn rejects_bad_values() {
        for p in [
            RuntimeParams { workers: 0, ..Default::default() },
            RuntimeParams { buckets: 0, ..Default::default() },
            RuntimeParams { gamma: -1.0, ..Default::default() },
            RuntimeParams { sigma2: f64::NAN, ..Default::default() },
            RuntimeParams { omega: 0.0, ..Default::default() },
            RuntimeParams { workers_per_node: 3, ..Default::default() },
            RuntimeParams { work_divisor: Some(0.0), ..Default::default() },
        ] {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }

    #[test]
    fn forward_costs() {
        let p = RuntimeParams::default();
        assert_eq!(p.allreduce_forward(), 0.5);
        assert_eq!(p.decentralized_forward(), 0.125);
        let q = RuntimeParams { forward: ForwardMode::Normalized, ..p };
        assert_eq!(q.decentralized_forward(), 0.5);
        let r = RuntimeParams { work_divisor: Some(2.0), ..p };
        assert_eq!(r.bucket_backward(), 1.0);
    }

    #[test]
    fn draws_are_keyed() {
        let a = SpeedDraws::sample(9, 4, 6, 0.05).unwrap();
        let b = SpeedDraws::sample(9, 4, 6, 0.05).unwrap();
        let c = SpeedDraws::sample(9, 8, 6, 0.05).unwrap();
        assert_eq!(a, b);
        // a worker's draw does not depend on how many workers there are
        assert_eq!(a.get(3, 5), c.get(3, 5));
        assert!(SpeedDraws::sample(9, 4, 6, 0.0).unwrap().values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn forward_mode_names() {
        for m in [ForwardMode::Asymmetric, ForwardMode::Normalized] {
            assert_eq!(m.as_str().parse::<ForwardMode>().unwrap(), m);
        }
        assert!("x".parse::<ForwardMode>().is_err());
    }
}
