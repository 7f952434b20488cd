//! Per-worker update rules.
//!
//! All step functions are pure: they take the worker's state, its local
//! stochastic gradient and (for the decentralized rules) the neighbour mix
//! `sum_j w_ij x_j^(t-1)` computed from a snapshot of the previous iteration's
//! models, and return the next state. Because the local direction never reads
//! a neighbour's iteration-`t` state, the mix can be communicated while the
//! gradient is being computed.

use std::fmt;
use std::str::FromStr;

use crate::common::ParamVector;
use crate::error::{Error, Result};

/// Max coordinate spread tolerated between replicated All-Reduce models.
pub const REPLICA_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptimizerKind {
    /// Decentralized Adam.
    DAdam,
    /// Adam on the All-Reduce averaged gradient.
    AllReduceAdam,
    /// Decentralized Adam with gradient accumulation in the moments.
    AccumAdam,
    /// Decentralized SGD, `x <- -alpha g + sum_j w_ij x_j`.
    Dsgd,
}

impl OptimizerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OptimizerKind::DAdam => "dadam",
            OptimizerKind::AllReduceAdam => "allreduce_adam",
            OptimizerKind::AccumAdam => "accum_adam",
            OptimizerKind::Dsgd => "dsgd",
        }
    }

    pub fn is_decentralized(self) -> bool {
        self != OptimizerKind::AllReduceAdam
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dadam" => Ok(OptimizerKind::DAdam),
            "allreduce_adam" => Ok(OptimizerKind::AllReduceAdam),
            "accum_adam" => Ok(OptimizerKind::AccumAdam),
            "dsgd" => Ok(OptimizerKind::Dsgd),
            other => Err(Error::param(format!("unknown optimizer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Accumulation length `s` of the accumulated variant.
    pub accumulation: usize,
    /// Update the accumulated second moment with `beta1`, like the first
    /// moment, instead of `beta2`.
    pub vhat_uses_beta1: bool,
    /// Iteration budget `T`; when set, the accumulated variant requires
    /// `T mod s == 0` and rejects `t > T`.
    pub horizon: Option<usize>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            alpha: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            accumulation: 1,
            vhat_uses_beta1: false,
            horizon: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::param(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(0.0 <= self.beta1 && self.beta1 < self.beta2 && self.beta2 < 1.0) {
            return Err(Error::param(format!(
                "need 0 <= beta1 < beta2 < 1, got beta1 = {}, beta2 = {}",
                self.beta1, self.beta2
            )));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::param(format!("eps must be positive, got {}", self.eps)));
        }
        if self.accumulation == 0 {
            return Err(Error::param("accumulation length must be >= 1"));
        }
        if let Some(t) = self.horizon {
            if t % self.accumulation != 0 {
                return Err(Error::param(format!(
                    "iteration budget {t} is not a multiple of accumulation length {}",
                    self.accumulation
                )));
            }
        }
        Ok(())
    }
}

/// Per-worker optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerState {
    pub x: ParamVector,
    pub m: ParamVector,
    pub v: ParamVector,
    /// Gradient accumulator of the accumulated variant.
    pub b_acc: ParamVector,
    /// Moments over completed accumulation groups.
    pub m_hat: ParamVector,
    pub v_hat: ParamVector,
    /// Last completed iteration.
    pub t: usize,
}

impl WorkerState {
    pub fn new(x0: ParamVector) -> Self {
        let d = x0.len();
        Self {
            x: x0,
            m: ParamVector::zeros(d),
            v: ParamVector::zeros(d),
            b_acc: ParamVector::zeros(d),
            m_hat: ParamVector::zeros(d),
            v_hat: ParamVector::zeros(d),
            t: 0,
        }
    }

    pub fn is_finite(&self) -> bool {
        [&self.x, &self.m, &self.v, &self.b_acc, &self.m_hat, &self.v_hat]
            .iter()
            .all(|v| v.is_finite())
    }
}

fn exponent(t: usize) -> Result<i32> {
    i32::try_from(t).map_err(|_| Error::param(format!("iteration {t} out of range")))
}

/// `beta * a + (1 - beta) * b`
fn ema(beta: f64, a: &ParamVector, b: &ParamVector) -> Result<ParamVector> {
    let mut out = a.scale(beta);
    out.axpy(1.0 - beta, b)?;
    Ok(out)
}

/// `-alpha (m / (1 - beta1^k)) / (sqrt(v / (1 - beta2^k)) + eps)`, with `eps`
/// outside the square root.
fn adam_direction(m: &ParamVector, v: &ParamVector, cfg: &OptimizerConfig, k: usize) -> Result<ParamVector> {
    let k = exponent(k)?;
    let m_hat = m.scale(1.0 / (1.0 - cfg.beta1.powi(k)));
    let v_hat = v.scale(1.0 / (1.0 - cfg.beta2.powi(k)));
    Ok(m_hat.div_sqrt_plus_eps(&v_hat, cfg.eps)?.scale(-cfg.alpha))
}

fn require_step(t: usize) -> Result<()> {
    if t == 0 {
        return Err(Error::param("iterations are numbered from 1"));
    }
    Ok(())
}

/// One decentralized Adam iteration on a worker.
pub fn dadam_step(
    state: &WorkerState,
    grad: &ParamVector,
    mixed_neighbor_sum: &ParamVector,
    cfg: &OptimizerConfig,
    t: usize,
) -> Result<WorkerState> {
    require_step(t)?;
    let m = ema(cfg.beta1, &state.m, grad)?;
    let v = ema(cfg.beta2, &state.v, &grad.hadamard_square())?;
    let x = adam_direction(&m, &v, cfg, t)?.add(mixed_neighbor_sum)?;
    Ok(WorkerState {
        x,
        m,
        v,
        t,
        ..state.clone()
    })
}

/// One All-Reduce Adam iteration for all workers at once.
///
/// Every worker applies Adam to the averaged gradient, so replicas must agree
/// on entry; a spread above [`REPLICA_TOL`] is a consistency error.
pub fn allreduce_adam_step(
    states: &[WorkerState],
    grads: &[ParamVector],
    cfg: &OptimizerConfig,
    t: usize,
) -> Result<Vec<WorkerState>> {
    require_step(t)?;
    let first = states
        .first()
        .ok_or_else(|| Error::param("All-Reduce step needs at least one worker"))?;
    if grads.len() != states.len() {
        return Err(Error::LengthMismatch {
            expected: states.len(),
            found: grads.len(),
        });
    }
    for (i, s) in states.iter().enumerate().skip(1) {
        let spread = s.x.sub(&first.x)?.linf_norm();
        if spread > REPLICA_TOL {
            return Err(Error::Consistency(format!(
                "worker {i} model differs from worker 0 by {spread:e} before All-Reduce step {t}"
            )));
        }
    }
    let g_bar = ParamVector::mean_of_set(grads)?;
    let m = ema(cfg.beta1, &first.m, &g_bar)?;
    let v = ema(cfg.beta2, &first.v, &g_bar.hadamard_square())?;
    let x = adam_direction(&m, &v, cfg, t)?.add(&first.x)?;
    let next = WorkerState {
        x,
        m,
        v,
        t,
        ..first.clone()
    };
    Ok(vec![next; states.len()])
}

/// One decentralized accumulated-Adam iteration on a worker.
///
/// Moments are built from the group moments `m_hat`, `v_hat` of the completed
/// accumulation groups plus the fresh gradient with weight 1; the bias
/// correction uses the group index `ceil(t / s)`.
pub fn accum_adam_step(
    state: &WorkerState,
    grad: &ParamVector,
    mixed_neighbor_sum: &ParamVector,
    cfg: &OptimizerConfig,
    t: usize,
) -> Result<WorkerState> {
    require_step(t)?;
    let s = cfg.accumulation;
    if s == 0 {
        return Err(Error::param("accumulation length must be >= 1"));
    }
    if let Some(horizon) = cfg.horizon {
        if t > horizon {
            return Err(Error::param(format!("iteration {t} exceeds budget {horizon}")));
        }
    }
    let group = t.div_ceil(s);
    let m = ema(cfg.beta1, &state.m_hat, grad)?;
    let v = ema(cfg.beta2, &state.v_hat, &grad.hadamard_square())?;
    let x = adam_direction(&m, &v, cfg, group)?.add(mixed_neighbor_sum)?;
    let mut b_acc = state.b_acc.clone();
    b_acc.axpy(1.0 / s as f64, grad)?;
    let (mut m_hat, mut v_hat) = (state.m_hat.clone(), state.v_hat.clone());
    if t.is_multiple_of(s) {
        m_hat = ema(cfg.beta1, &m_hat, &b_acc)?;
        let beta_v = if cfg.vhat_uses_beta1 { cfg.beta1 } else { cfg.beta2 };
        v_hat = ema(beta_v, &v_hat, &b_acc.hadamard_square())?;
        b_acc = ParamVector::zeros(b_acc.len());
    }
    Ok(WorkerState {
        x,
        m,
        v,
        b_acc,
        m_hat,
        v_hat,
        t,
    })
}

/// One decentralized SGD iteration: `x <- -alpha g + sum_j w_ij x_j`.
pub fn dsgd_step(
    state: &WorkerState,
    grad: &ParamVector,
    mixed_neighbor_sum: &ParamVector,
    alpha: f64,
) -> Result<WorkerState> {
    let mut x = mixed_neighbor_sum.clone();
    x.axpy(-alpha, grad)?;
    Ok(WorkerState {
        x,
        t: state.t + 1,
        ..state.clone()
    })
}
