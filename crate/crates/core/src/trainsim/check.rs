use crate::common::{Purpose, StreamRng};
use crate::error::{Error, Result};
use crate::optim::OptimizerKind;

use super::bounds::{evaluate_theorem1_bound, evaluate_theorem2_bound, BoundInputs, BoundReport};
use super::tau::{sample_tau, tau_distribution};
use super::trainer::{run_training, TrainConfig};

/// How the expectation over the stopping index `tau` is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauMode {
    /// One `tau` draw per seed, averaged over seeds.
    Sampled,
    /// Exact weighting of every iterate by `P[tau = t]`.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    /// Report with `lhs` filled in.
    pub report: BoundReport,
    /// Per-seed estimates of `E[|grad F(x_bar^(tau))|^2]`.
    pub per_seed: Vec<f64>,
    /// Largest stochastic-gradient inf-norm observed over all seeds.
    pub max_grad_linf: f64,
}

impl BoundCheck {
    pub fn lhs(&self) -> f64 {
        self.report.lhs.unwrap_or(f64::NAN)
    }

    pub fn rhs(&self) -> f64 {
        self.report.rhs
    }

    pub fn margin(&self) -> f64 {
        self.rhs() - self.lhs()
    }

    pub fn holds(&self) -> bool {
        self.lhs() <= self.rhs()
    }
}

/// Trains `n_seeds` replicas (seeds `cfg.seed`, `cfg.seed + 1`, ...) and
/// compares the measured `E[|grad F(x_bar^(tau))|^2]` with the bound's
/// right-hand side. The momentum bound is used when `beta1 > 0`, the
/// momentum-free bound when `beta1 = 0`.
pub fn check_bound(cfg: &TrainConfig, n_seeds: usize, mode: TauMode) -> Result<BoundCheck> {
    if n_seeds == 0 {
        return Err(Error::param("need at least one seed"));
    }
    if cfg.optimizer != OptimizerKind::DAdam {
        return Err(Error::InvalidSetup(format!(
            "bound check needs the decentralized Adam optimizer, got {}",
            cfg.optimizer
        )));
    }
    if cfg.schedule.period() != 1 {
        return Err(Error::InvalidSetup(format!(
            "bound check needs a static mixing matrix, schedule has period {}",
            cfg.schedule.period()
        )));
    }
    let r = cfg.problem.gradient_bound().ok_or_else(|| {
        Error::InvalidSetup("problem has no almost-sure gradient bound".into())
    })?;
    let lambda = cfg.schedule.matrix_at(1).spectral_lambda();
    if lambda >= 1.0 {
        return Err(Error::InvalidSetup(format!(
            "mixing matrix is not connected (lambda = {lambda})"
        )));
    }
    cfg.validate()?;

    let t = cfg.iterations;
    let weights = tau_distribution(t, cfg.opt.beta1)?;
    let limit = r - cfg.opt.eps.sqrt();
    let mut per_seed = Vec::with_capacity(n_seeds);
    let mut f_gap = None;
    let mut max_grad_linf: f64 = 0.0;
    for s in 0..n_seeds {
        let mut run = cfg.clone();
        run.seed = cfg.seed.wrapping_add(s as u64);
        let log = run_training(run)?;
        if log.max_grad_linf > limit {
            return Err(Error::InvalidSetup(format!(
                "stochastic gradient inf-norm {} exceeds R - sqrt(eps) = {limit}",
                log.max_grad_linf
            )));
        }
        max_grad_linf = max_grad_linf.max(log.max_grad_linf);
        f_gap.get_or_insert(log.initial_loss - cfg.problem.optimal_value());
        let estimate = match mode {
            TauMode::Exact => weights
                .iter()
                .enumerate()
                .map(|(k, p)| p * log.grad_norm_sq_at(k))
                .sum(),
            TauMode::Sampled => {
                let mut rng = StreamRng::keyed(cfg.seed.wrapping_add(s as u64), Purpose::Tau, 0, 0);
                log.grad_norm_sq_at(sample_tau(t, cfg.opt.beta1, &mut rng)?)
            }
        };
        per_seed.push(estimate);
    }
    let inputs = BoundInputs {
        alpha: cfg.opt.alpha,
        beta1: cfg.opt.beta1,
        beta2: cfg.opt.beta2,
        eps: cfg.opt.eps,
        r,
        l: cfg.problem.smoothness(),
        d: cfg.problem.dim() as f64,
        lambda,
        iterations: t,
        // rounding can push a converged start marginally below F*
        f_gap: f_gap.unwrap_or(0.0).max(0.0),
    };
    let mut report = if cfg.opt.beta1 > 0.0 {
        evaluate_theorem1_bound(&inputs)?
    } else {
        evaluate_theorem2_bound(&inputs)?
    };
    report.lhs = Some(per_seed.iter().sum::<f64>() / n_seeds as f64);
    Ok(BoundCheck {
        report,
        per_seed,
        max_grad_linf,
    })
}
