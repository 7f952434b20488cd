use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::common::{ParamVector, Purpose, StreamRng};
use crate::error::{Error, Result};
use crate::optim::{
    accum_adam_step, allreduce_adam_step, dadam_step, dsgd_step, OptimizerConfig, OptimizerKind,
    WorkerState,
};
use crate::problems::{minibatch, Minibatch, Problem};
use crate::topology::MixingSchedule;

/// How each worker draws its samples every iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchMode {
    /// Every worker uses the whole dataset (deterministic gradients).
    FullPerWorker,
    /// Fixed global batch `B`; each worker draws `B / N` samples with
    /// replacement.
    Global(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialModels {
    Shared(ParamVector),
    PerWorker(Vec<ParamVector>),
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub workers: usize,
    pub iterations: usize,
    pub schedule: MixingSchedule,
    pub optimizer: OptimizerKind,
    pub opt: OptimizerConfig,
    pub problem: Arc<dyn Problem>,
    pub batch: BatchMode,
    pub seed: u64,
    pub initial: InitialModels,
    /// Run the workers of one iteration on the rayon pool. Results do not
    /// depend on this flag.
    pub parallel: bool,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.workers;
        if n == 0 {
            return Err(Error::param("need at least one worker"));
        }
        if self.iterations == 0 {
            return Err(Error::param("need at least one iteration"));
        }
        if self.schedule.workers() != n {
            return Err(Error::param(format!(
                "schedule has {} workers, config has {n}",
                self.schedule.workers()
            )));
        }
        if let BatchMode::Global(b) = self.batch {
            if b == 0 || b % n != 0 {
                return Err(Error::param(format!(
                    "global batch {b} must be a positive multiple of the worker count {n}"
                )));
            }
            if b / n > self.problem.samples() {
                return Err(Error::param(format!(
                    "local batch {} exceeds dataset size {}",
                    b / n,
                    self.problem.samples()
                )));
            }
        }
        match self.optimizer {
            OptimizerKind::Dsgd => {
                if !(self.opt.alpha > 0.0) || !self.opt.alpha.is_finite() {
                    return Err(Error::param("alpha must be positive"));
                }
            }
            _ => self.opt.validate()?,
        }
        if self.optimizer == OptimizerKind::AccumAdam && !self.iterations.is_multiple_of(self.opt.accumulation) {
            return Err(Error::param(format!(
                "iterations {} must be a multiple of the accumulation length {}",
                self.iterations, self.opt.accumulation
            )));
        }
        let d = self.problem.dim();
        let initial_ok = match &self.initial {
            InitialModels::Shared(x) => x.len() == d,
            InitialModels::PerWorker(xs) => xs.len() == n && xs.iter().all(|x| x.len() == d),
        };
        if !initial_ok {
            return Err(Error::param(format!(
                "initial models must be {n} vectors (or one shared) of dimension {d}"
            )));
        }
        if self.optimizer == OptimizerKind::AllReduceAdam {
            if let InitialModels::PerWorker(xs) = &self.initial {
                if xs.windows(2).any(|w| w[0] != w[1]) {
                    return Err(Error::param("All-Reduce training needs a shared initial model"));
                }
            }
        }
        Ok(())
    }

    fn initial_models(&self) -> Vec<ParamVector> {
        match &self.initial {
            InitialModels::Shared(x) => vec![x.clone(); self.workers],
            InitialModels::PerWorker(xs) => xs.clone(),
        }
    }
}

/// Per-iteration metrics of the averaged model `x_bar = (1/N) sum_i x_i`.
///
/// `loss`, `grad_norm_sq` and `consensus_error` hold iterations `1..=T`;
/// the `initial_*` fields hold iteration 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsLog {
    pub initial_loss: f64,
    pub initial_grad_norm_sq: f64,
    pub initial_consensus_error: f64,
    pub loss: Vec<f64>,
    pub grad_norm_sq: Vec<f64>,
    /// `(1/N) sum_i |x_i - x_bar|^2`.
    pub consensus_error: Vec<f64>,
    /// Largest stochastic-gradient inf-norm seen on any worker.
    pub max_grad_linf: f64,
    pub final_mean: ParamVector,
}

impl MetricsLog {
    /// `|grad F(x_bar^(t))|^2` for `t` in `0..=T`.
    pub fn grad_norm_sq_at(&self, t: usize) -> f64 {
        if t == 0 {
            self.initial_grad_norm_sq
        } else {
            self.grad_norm_sq[t - 1]
        }
    }

    /// CSV with header `iteration,loss,grad_norm_sq,consensus_error`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "loss", "grad_norm_sq", "consensus_error"])?;
        for t in 0..self.loss.len() {
            w.write_record([
                (t + 1).to_string(),
                self.loss[t].to_string(),
                self.grad_norm_sq[t].to_string(),
                self.consensus_error[t].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Iteration-by-iteration driver behind [`run_training`].
#[derive(Debug)]
pub struct Trainer {
    cfg: TrainConfig,
    states: Vec<WorkerState>,
    t: usize,
    max_grad_linf: f64,
}

struct Snapshot {
    mean: ParamVector,
    loss: f64,
    grad_norm_sq: f64,
    consensus_error: f64,
}

impl Trainer {
    pub fn new(cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let states = cfg.initial_models().into_iter().map(WorkerState::new).collect();
        Ok(Self {
            cfg,
            states,
            t: 0,
            max_grad_linf: 0.0,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn states(&self) -> &[WorkerState] {
        &self.states
    }

    /// Completed iterations.
    pub fn iteration(&self) -> usize {
        self.t
    }

    pub fn models(&self) -> Vec<ParamVector> {
        self.states.iter().map(|s| s.x.clone()).collect()
    }

    pub fn mean_model(&self) -> Result<ParamVector> {
        ParamVector::mean_of_set(&self.models())
    }

    fn batch_for(&self, worker: usize, t: usize) -> Result<Minibatch> {
        match self.cfg.batch {
            BatchMode::FullPerWorker => Ok(Minibatch::full(self.cfg.problem.samples())),
            BatchMode::Global(b) => {
                let mut rng = StreamRng::keyed(self.cfg.seed, Purpose::Minibatch, worker, t);
                minibatch(self.cfg.problem.as_ref(), &mut rng, b / self.cfg.workers)
            }
        }
    }

    fn gradient(&self, worker: usize, t: usize) -> Result<ParamVector> {
        let batch = self.batch_for(worker, t)?;
        let g = self
            .cfg
            .problem
            .minibatch_gradient(&self.states[worker].x, &batch)?;
        if !g.is_finite() {
            return Err(Error::Divergence {
                iteration: t,
                detail: format!("non-finite gradient on worker {worker}"),
            });
        }
        Ok(g)
    }

    fn worker_update(
        &self,
        worker: usize,
        t: usize,
        snapshot: &[ParamVector],
    ) -> Result<(WorkerState, ParamVector)> {
        let g = self.gradient(worker, t)?;
        let mixed = self.cfg.schedule.matrix_at(t).mix_row(worker, snapshot)?;
        let state = &self.states[worker];
        let next = match self.cfg.optimizer {
            OptimizerKind::DAdam => dadam_step(state, &g, &mixed, &self.cfg.opt, t)?,
            OptimizerKind::AccumAdam => accum_adam_step(state, &g, &mixed, &self.cfg.opt, t)?,
            OptimizerKind::Dsgd => dsgd_step(state, &g, &mixed, self.cfg.opt.alpha)?,
            OptimizerKind::AllReduceAdam => unreachable!("handled collectively"),
        };
        Ok((next, g))
    }

    /// Runs one iteration and returns the stochastic gradients each worker
    /// used.
    ///
    /// All workers mix the models of the previous iteration (a snapshot taken
    /// before anyone updates), so worker order and parallelism cannot change
    /// the result.
    pub fn step(&mut self) -> Result<Vec<ParamVector>> {
        let t = self.t + 1;
        let n = self.cfg.workers;
        let (next, grads): (Vec<WorkerState>, Vec<ParamVector>) =
            if self.cfg.optimizer == OptimizerKind::AllReduceAdam {
                let grads: Vec<ParamVector> = if self.cfg.parallel {
                    (0..n)
                        .into_par_iter()
                        .map(|i| self.gradient(i, t))
                        .collect::<Result<_>>()?
                } else {
                    (0..n).map(|i| self.gradient(i, t)).collect::<Result<_>>()?
                };
                (allreduce_adam_step(&self.states, &grads, &self.cfg.opt, t)?, grads)
            } else {
                let snapshot = self.models();
                let results: Vec<(WorkerState, ParamVector)> = if self.cfg.parallel {
                    (0..n)
                        .into_par_iter()
                        .map(|i| self.worker_update(i, t, &snapshot))
                        .collect::<Result<_>>()?
                } else {
                    (0..n)
                        .map(|i| self.worker_update(i, t, &snapshot))
                        .collect::<Result<_>>()?
                };
                results.into_iter().unzip()
            };
        if let Some(i) = next.iter().position(|s| !s.is_finite()) {
            return Err(Error::Divergence {
                iteration: t,
                detail: format!("non-finite optimizer state on worker {i}"),
            });
        }
        for g in &grads {
            self.max_grad_linf = self.max_grad_linf.max(g.linf_norm());
        }
        self.states = next;
        self.t = t;
        Ok(grads)
    }

    fn snapshot(&self) -> Result<Snapshot> {
        let models = self.models();
        let mean = ParamVector::mean_of_set(&models)?;
        let loss = self.cfg.problem.loss(&mean)?;
        let grad_norm_sq = self.cfg.problem.full_gradient(&mean)?.l2_norm_sq();
        let consensus_error = crate::topology::dispersion(&models, &mean)? / models.len() as f64;
        if !(loss.is_finite() && grad_norm_sq.is_finite() && consensus_error.is_finite()) {
            return Err(Error::Divergence {
                iteration: self.t,
                detail: "non-finite metrics of the averaged model".into(),
            });
        }
        Ok(Snapshot {
            mean,
            loss,
            grad_norm_sq,
            consensus_error,
        })
    }
}

/// Runs `cfg.iterations` iterations and records metrics of the averaged model.
pub fn run_training(cfg: TrainConfig) -> Result<MetricsLog> {
    let iterations = cfg.iterations;
    let mut trainer = Trainer::new(cfg)?;
    let start = trainer.snapshot()?;
    let mut log = MetricsLog {
        initial_loss: start.loss,
        initial_grad_norm_sq: start.grad_norm_sq,
        initial_consensus_error: start.consensus_error,
        loss: Vec::with_capacity(iterations),
        grad_norm_sq: Vec::with_capacity(iterations),
        consensus_error: Vec::with_capacity(iterations),
        max_grad_linf: 0.0,
        final_mean: start.mean,
    };
    for _ in 0..iterations {
        trainer.step()?;
        let snap = trainer.snapshot()?;
        log.loss.push(snap.loss);
        log.grad_norm_sq.push(snap.grad_norm_sq);
        log.consensus_error.push(snap.consensus_error);
        log.final_mean = snap.mean;
    }
    log.max_grad_linf = trainer.max_grad_linf;
    Ok(log)
}
