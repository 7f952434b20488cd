use std::fmt;
use std::io::Write;

use super::params::SpeedDraws;
use crate::error::Result;

/// Dependency model a timeline was simulated under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimMode {
    AllReduce,
    Decentralized,
    /// Decentralized with updates coupled inside each node.
    Sgp,
}

impl SimMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SimMode::AllReduce => "allreduce",
            SimMode::Decentralized => "decentralized",
            SimMode::Sgp => "sgp",
        }
    }
}

impl fmt::Display for SimMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Task durations used to recover start times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Durations {
    pub forward: f64,
    pub backward: f64,
    pub update: f64,
    pub comm: f64,
}

/// Completion times of every task of every worker, plus the per-iteration
/// runtimes derived from them.
///
/// Times are indexed by 1-based iteration `t` and bucket `k`, 0-based
/// worker `i`. Iteration 0 is the all-zero initial condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Timeline {
    pub(crate) mode: SimMode,
    pub(crate) workers: usize,
    pub(crate) buckets: usize,
    pub(crate) iterations: usize,
    pub(crate) durations: Durations,
    pub(crate) speeds: SpeedDraws,
    pub(crate) f: Vec<f64>,
    pub(crate) b: Vec<f64>,
    pub(crate) c: Vec<f64>,
    /// One slot per `(t, i)` for All-Reduce, one per bucket otherwise.
    pub(crate) u: Vec<f64>,
    pub(crate) runtimes: Vec<f64>,
}

impl Timeline {
    pub(crate) fn new(
        mode: SimMode,
        workers: usize,
        buckets: usize,
        durations: Durations,
        speeds: SpeedDraws,
    ) -> Self {
        let iterations = speeds.iterations();
        let rows = (iterations + 1) * workers;
        let u_slots = if mode == SimMode::AllReduce { 1 } else { buckets };
        Self {
            mode,
            workers,
            buckets,
            iterations,
            durations,
            speeds,
            f: vec![0.0; rows],
            b: vec![0.0; rows * buckets],
            c: vec![0.0; rows * buckets],
            u: vec![0.0; rows * u_slots],
            runtimes: Vec::with_capacity(iterations),
        }
    }

    pub(crate) fn row(&self, i: usize, t: usize) -> usize {
        t * self.workers + i
    }

    pub(crate) fn slot(&self, i: usize, t: usize, k: usize) -> usize {
        self.row(i, t) * self.buckets + (k - 1)
    }

    pub fn mode(&self) -> SimMode {
        self.mode
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn speeds(&self) -> &SpeedDraws {
        &self.speeds
    }

    pub fn forward(&self, i: usize, t: usize) -> f64 {
        self.f[self.row(i, t)]
    }

    pub fn backward(&self, i: usize, t: usize, k: usize) -> f64 {
        self.b[self.slot(i, t, k)]
    }

    pub fn comm(&self, i: usize, t: usize, k: usize) -> f64 {
        self.c[self.slot(i, t, k)]
    }

    /// Completion of bucket `k`'s update. All-Reduce updates all buckets in
    /// one task, so every `k` maps to the same time there.
    pub fn update(&self, i: usize, t: usize, k: usize) -> f64 {
        match self.mode {
            SimMode::AllReduce => self.u[self.row(i, t)],
            _ => self.u[self.slot(i, t, k)],
        }
    }

    /// Time worker `i` finishes iteration `t` (`U` or `U_1`).
    pub fn finish(&self, i: usize, t: usize) -> f64 {
        self.update(i, t, 1)
    }

    /// `max_i finish(i, t) - max_i finish(i, t - 1)` for `t` in `1..=T`.
    pub fn runtimes(&self) -> &[f64] {
        &self.runtimes
    }

    /// Mean of the per-iteration runtimes over all `T` iterations.
    pub fn mean_runtime(&self) -> f64 {
        self.runtimes.iter().sum::<f64>() / self.iterations as f64
    }

    pub(crate) fn max_finish(&self, t: usize) -> f64 {
        (0..self.workers)
            .map(|i| self.finish(i, t))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn close_iteration(&mut self, t: usize) {
        let r = self.max_finish(t) - self.max_finish(t - 1);
        self.runtimes.push(r);
    }

    /// Every task as a Gantt bar, sorted by `(worker, start)`.
    pub fn tasks(&self) -> Vec<TaskBar> {
        let d = self.durations;
        let mut bars = Vec::new();
        for i in 0..self.workers {
            for t in 1..=self.iterations {
                let p = self.speeds.get(i, t);
                let f = self.forward(i, t);
                bars.push(TaskBar::new(i, t, TaskKind::Forward, 0, f - p * d.forward, f));
                for k in (1..=self.buckets).rev() {
                    let b = self.backward(i, t, k);
                    bars.push(TaskBar::new(i, t, TaskKind::Backward, k, b - p * d.backward, b));
                    if self.mode != SimMode::AllReduce {
                        let u = self.update(i, t, k);
                        bars.push(TaskBar::new(i, t, TaskKind::Update, k, u - d.update, u));
                    }
                    let c = self.comm(i, t, k);
                    bars.push(TaskBar::new(i, t, TaskKind::Comm, k, c - d.comm, c));
                }
                if self.mode == SimMode::AllReduce {
                    let u = self.finish(i, t);
                    bars.push(TaskBar::new(i, t, TaskKind::Update, 0, u - d.update, u));
                }
            }
        }
        bars.sort_by(|a, b| {
            a.worker
                .cmp(&b.worker)
                .then(a.start.total_cmp(&b.start))
                .then(a.iteration.cmp(&b.iteration))
                .then(b.bucket.cmp(&a.bucket))
        });
        bars
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    Forward,
    Backward,
    Update,
    Comm,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Forward => "F",
            TaskKind::Backward => "B",
            TaskKind::Update => "U",
            TaskKind::Comm => "C",
        }
    }

    /// Forward, backward and update share a worker's compute lane.
    pub fn is_compute(self) -> bool {
        self != TaskKind::Comm
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskBar {
    pub worker: usize,
    pub iteration: usize,
    pub task: TaskKind,
    /// 0 for the forward pass and the All-Reduce update.
    pub bucket: usize,
    pub start: f64,
    pub end: f64,
}

impl TaskBar {
    fn new(worker: usize, iteration: usize, task: TaskKind, bucket: usize, start: f64, end: f64) -> Self {
        Self {
            worker,
            iteration,
            task,
            bucket,
            start,
            end,
        }
    }
}

/// Gantt CSV with header `worker,iteration,task,bucket,start,end`.
pub fn export_timeline<W: Write>(timeline: &Timeline, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["worker", "iteration", "task", "bucket", "start", "end"])?;
    for bar in timeline.tasks() {
        w.write_record([
            bar.worker.to_string(),
            bar.iteration.to_string(),
            bar.task.as_str().to_string(),
            bar.bucket.to_string(),
            bar.start.to_string(),
            bar.end.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
