use std::sync::Arc;

use desklab::common::{ParamVector, Purpose, StreamRng};
use desklab::optim::{accum_adam_step, dadam_step, OptimizerConfig, OptimizerKind, WorkerState};
use desklab::problems::{make_quadratic, minibatch, LeastSquares, Problem, ZeroObjective};
use desklab::topology::{gossip_consensus, make_aer, make_complete, make_one_peer_exponential, MixingMatrix, MixingSchedule};
use desklab::trainsim::{run_training, BatchMode, InitialModels, TrainConfig, Trainer};
use desklab::Error;
use nalgebra::{DMatrix, DVector};

fn quadratic(seed: u64) -> Arc<LeastSquares> {
    let mut rng = StreamRng::keyed(seed, Purpose::Dataset, 0, 0);
    let (n, d) = (40, 5);
    let a = DMatrix::from_fn(n, d, |_, _| 2.0 * rng.uniform() - 1.0);
    let b = DVector::from_fn(n, |_, _| 2.0 * rng.uniform() - 1.0);
    Arc::new(make_quadratic(a, b).unwrap())
}

fn config(
    problem: Arc<dyn Problem>,
    schedule: MixingSchedule,
    optimizer: OptimizerKind,
    alpha: f64,
    iterations: usize,
) -> TrainConfig {
    let workers = schedule.workers();
    let dim = problem.dim();
    TrainConfig {
        workers,
        iterations,
        schedule,
        optimizer,
        opt: OptimizerConfig { alpha, ..OptimizerConfig::default() },
        problem,
        batch: BatchMode::FullPerWorker,
        seed: 7,
        initial: InitialModels::Shared(ParamVector::filled(dim, 0.5)),
        parallel: false,
    }
}

fn spread_models(n: usize, dim: usize) -> Vec<ParamVector> {
    (0..n)
        .map(|i| ParamVector::new((0..dim).map(|k| (i as f64 - 1.5 * k as f64).sin()).collect()).unwrap())
        .collect()
}

/// Textbook Adam on plain slices.
struct RefAdam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl RefAdam {
    fn new(d: usize) -> Self {
        Self { m: vec![0.0; d], v: vec![0.0; d], t: 0 }
    }

    fn step(&mut self, x: &mut [f64], g: &[f64], c: &OptimizerConfig) {
        self.t += 1;
        for k in 0..x.len() {
            self.m[k] = c.beta1 * self.m[k] + (1.0 - c.beta1) * g[k];
            self.v[k] = c.beta2 * self.v[k] + (1.0 - c.beta2) * g[k] * g[k];
            let mh = self.m[k] / (1.0 - c.beta1.powi(self.t));
            let vh = self.v[k] / (1.0 - c.beta2.powi(self.t));
            x[k] -= c.alpha * mh / (vh.sqrt() + c.eps);
        }
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn single_worker_dadam_is_adam() {
    let problem = quadratic(1);
    let cfg = config(problem.clone(), make_complete(1).unwrap(), OptimizerKind::DAdam, 1e-2, 100);
    let opt = cfg.opt;
    let mut trainer = Trainer::new(cfg).unwrap();
    let mut x = vec![0.5; 5];
    let mut reference = RefAdam::new(5);
    for _ in 0..100 {
        let g = problem.full_gradient(&ParamVector::new(x.clone()).unwrap()).unwrap();
        reference.step(&mut x, g.as_slice(), &opt);
        trainer.step().unwrap();
        assert!(max_diff(trainer.states()[0].x.as_slice(), &x) < 1e-12);
    }
}

#[test]
fn allreduce_adam_is_adam_on_averaged_minibatches() {
    let problem = quadratic(2);
    let mut cfg = config(problem.clone(), make_complete(4).unwrap(), OptimizerKind::AllReduceAdam, 5e-3, 60);
    cfg.batch = BatchMode::Global(32);
    let opt = cfg.opt;
    let seed = cfg.seed;
    let mut trainer = Trainer::new(cfg).unwrap();
    let mut x = vec![0.5; 5];
    let mut reference = RefAdam::new(5);
    for t in 1..=60 {
        let xv = ParamVector::new(x.clone()).unwrap();
        let mut g = vec![0.0; 5];
        for i in 0..4 {
            let mut rng = StreamRng::keyed(seed, Purpose::Minibatch, i, t);
            let batch = minibatch(problem.as_ref(), &mut rng, 8).unwrap();
            let gi = problem.minibatch_gradient(&xv, &batch).unwrap();
            for k in 0..5 {
                g[k] += gi[k] / 4.0;
            }
        }
        reference.step(&mut x, &g, &opt);
        trainer.step().unwrap();
        for s in trainer.states() {
            assert!(max_diff(s.x.as_slice(), &x) < 1e-12);
        }
    }
}

#[test]
fn mixing_uses_previous_iterates() {
    let problem = quadratic(3);
    let w = MixingMatrix::new(DMatrix::from_row_slice(
        4,
        4,
        &[
            0.5, 0.25, 0.0, 0.25, //
            0.25, 0.5, 0.25, 0.0, //
            0.0, 0.25, 0.5, 0.25, //
            0.25, 0.0, 0.25, 0.5,
        ],
    ))
    .unwrap();
    let mut cfg = config(problem, MixingSchedule::fixed(w.clone()), OptimizerKind::DAdam, 1e-2, 5);
    cfg.initial = InitialModels::PerWorker(spread_models(4, 5));
    let opt = cfg.opt;
    let mut trainer = Trainer::new(cfg).unwrap();
    for t in 1..=5 {
        let before: Vec<WorkerState> = trainer.states().to_vec();
        let grads = trainer.step().unwrap();
        let mut in_place = before.clone();
        for i in 0..4 {
            let mut mixed = ParamVector::zeros(5);
            for (j, s) in before.iter().enumerate() {
                mixed.axpy(w.weight(i, j), &s.x).unwrap();
            }
            let expected = dadam_step(&before[i], &grads[i], &mixed, &opt, t).unwrap();
            assert!(max_diff(expected.x.as_slice(), trainer.states()[i].x.as_slice()) < 1e-15);

            // updating in place would mix already-updated neighbours
            let mut seq_mixed = ParamVector::zeros(5);
            for (j, s) in in_place.iter().enumerate() {
                seq_mixed.axpy(w.weight(i, j), &s.x).unwrap();
            }
            in_place[i] = dadam_step(&before[i], &grads[i], &seq_mixed, &opt, t).unwrap();
        }
        let gap = max_diff(in_place[3].x.as_slice(), trainer.states()[3].x.as_slice());
        assert!(gap > 1e-6, "in-place mixing indistinguishable at t={t}: {gap}");
    }
}

#[test]
fn parallel_equals_sequential() {
    let problem = quadratic(4);
    for kind in [OptimizerKind::DAdam, OptimizerKind::AccumAdam, OptimizerKind::Dsgd, OptimizerKind::AllReduceAdam] {
        let mut cfg = config(problem.clone(), make_one_peer_exponential(8).unwrap(), kind, 1e-2, 40);
        cfg.batch = BatchMode::Global(16);
        cfg.opt.accumulation = 4;
        if kind != OptimizerKind::AllReduceAdam {
            cfg.initial = InitialModels::PerWorker(spread_models(8, 5));
        }
        let seq = run_training(cfg.clone()).unwrap();
        let par = run_training(TrainConfig { parallel: true, ..cfg.clone() }).unwrap();
        assert_eq!(seq, par, "{kind}");
        let mut a = Vec::new();
        let mut b = Vec::new();
        seq.write_csv(&mut a).unwrap();
        run_training(cfg).unwrap().write_csv(&mut b).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn metrics_log_shape() {
    let problem = quadratic(5);
    let mut cfg = config(problem, make_aer(8, 2).unwrap(), OptimizerKind::DAdam, 1e-2, 30);
    cfg.initial = InitialModels::PerWorker(spread_models(8, 5));
    let log = run_training(cfg).unwrap();
    assert_eq!(log.loss.len(), 30);
    assert_eq!(log.grad_norm_sq.len(), 30);
    assert_eq!(log.consensus_error.len(), 30);
    assert!(log.consensus_error.iter().all(|&c| c >= 0.0));
    assert!(log.initial_consensus_error > 0.0);
    let mut buf = Vec::new();
    log.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("iteration,loss,grad_norm_sq,consensus_error\n1,"));
    assert_eq!(text.lines().count(), 31);
}

#[test]
fn dsgd_mean_follows_averaged_gradient() {
    let problem = quadratic(6);
    let mut cfg = config(problem, make_one_peer_exponential(8).unwrap(), OptimizerKind::Dsgd, 0.05, 50);
    cfg.batch = BatchMode::Global(24);
    cfg.initial = InitialModels::PerWorker(spread_models(8, 5));
    let mut trainer = Trainer::new(cfg).unwrap();
    for _ in 0..50 {
        let before = trainer.mean_model().unwrap();
        let grads = trainer.step().unwrap();
        let mut expected = before;
        for g in &grads {
            expected.axpy(-0.05 / 8.0, g).unwrap();
        }
        let after = trainer.mean_model().unwrap();
        assert!(max_diff(after.as_slice(), expected.as_slice()) < 1e-12);
    }
}

#[test]
fn zero_objective_reduces_to_gossip() {
    let problem: Arc<dyn Problem> = Arc::new(ZeroObjective::new(3, 10).unwrap());
    let initial = spread_models(8, 3);
    for schedule in [make_one_peer_exponential(8).unwrap(), make_aer(8, 2).unwrap(), make_complete(8).unwrap()] {
        let expected = gossip_consensus(&schedule, &initial, 12).unwrap();
        for kind in [OptimizerKind::DAdam, OptimizerKind::Dsgd] {
            let mut cfg = config(problem.clone(), schedule.clone(), kind, 1e-2, 12);
            cfg.initial = InitialModels::PerWorker(initial.clone());
            let log = run_training(cfg).unwrap();
            for t in 1..=12 {
                let rel = log.consensus_error[t - 1] / log.initial_consensus_error;
                assert!((rel - expected.errors[t]).abs() < 1e-12, "{kind} t={t}");
            }
        }
    }
}

#[test]
fn single_worker_dadam_converges_on_quadratic() {
    let problem = quadratic(8);
    let log = run_training(config(problem, make_complete(1).unwrap(), OptimizerKind::DAdam, 1e-2, 500)).unwrap();
    let first_below = log.grad_norm_sq.iter().position(|&g| g < 1e-8).expect("never reached 1e-8");
    assert!(log.grad_norm_sq[first_below..].iter().all(|&g| g < 1e-8), "left the 1e-8 ball");
}

#[test]
fn accum_with_unit_length_is_dadam() {
    for seed in 0..20u64 {
        let cfg = OptimizerConfig { alpha: 1e-2, accumulation: 1, ..OptimizerConfig::default() };
        let mut rng = StreamRng::keyed(seed, Purpose::Custom(1), 0, 0);
        let x0 = ParamVector::new((0..6).map(|_| rng.uniform()).collect()).unwrap();
        let mut a = WorkerState::new(x0.clone());
        let mut b = WorkerState::new(x0);
        for t in 1..=100 {
            let g = ParamVector::new((0..6).map(|_| 4.0 * rng.uniform() - 2.0).collect()).unwrap();
            let mixed_a = a.x.scale(0.9);
            let mixed_b = b.x.scale(0.9);
            a = dadam_step(&a, &g, &mixed_a, &cfg, t).unwrap();
            b = accum_adam_step(&b, &g, &mixed_b, &cfg, t).unwrap();
            assert!(max_diff(a.x.as_slice(), b.x.as_slice()) < 1e-12);
            assert!(max_diff(a.m.as_slice(), b.m.as_slice()) < 1e-12);
            assert!(max_diff(a.v.as_slice(), b.v.as_slice()) < 1e-12);
        }
    }
}

#[test]
fn accumulated_momentum_expansion() {
    let (s, beta1) = (4usize, 0.9f64);
    let cfg = OptimizerConfig { alpha: 1e-2, beta1, accumulation: s, horizon: Some(12), ..OptimizerConfig::default() };
    let mut rng = StreamRng::keyed(5, Purpose::Custom(2), 0, 0);
    let mut state = WorkerState::new(ParamVector::zeros(3));
    let mut history: Vec<Vec<f64>> = Vec::new();
    for t in 1..=12 {
        let g: Vec<f64> = (0..3).map(|_| 2.0 * rng.uniform() - 1.0).collect();
        history.push(g.clone());
        let mixed = state.x.clone();
        state = accum_adam_step(&state, &ParamVector::new(g.clone()).unwrap(), &mixed, &cfg, t).unwrap();
        let t_hat = t.div_ceil(s);
        for d in 0..3 {
            let mut sum = g[d];
            for k in 1..t_hat {
                let group_mean: f64 = history[(k - 1) * s..k * s].iter().map(|h| h[d]).sum::<f64>() / s as f64;
                sum += beta1.powi((t_hat - k) as i32) * group_mean;
            }
            assert!((state.m[d] - (1.0 - beta1) * sum).abs() < 1e-12, "t={t}");
        }
    }
}

#[test]
fn divergence_names_the_iteration() {
    let problem = quadratic(9);
    let cfg = config(problem, make_complete(2).unwrap(), OptimizerKind::Dsgd, 1e3, 5000);
    match run_training(cfg) {
        Err(Error::Divergence { iteration, .. }) => assert!(iteration > 1 && iteration < 5000),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let problem = quadratic(10);
    let base = config(problem, make_complete(4).unwrap(), OptimizerKind::DAdam, 1e-2, 10);
    let bad = [
        TrainConfig { batch: BatchMode::Global(6), ..base.clone() },
        TrainConfig { iterations: 0, ..base.clone() },
        TrainConfig { workers: 3, ..base.clone() },
        TrainConfig {
            optimizer: OptimizerKind::AllReduceAdam,
            initial: InitialModels::PerWorker(spread_models(4, 5)),
            ..base.clone()
        },
        TrainConfig {
            optimizer: OptimizerKind::AccumAdam,
            opt: OptimizerConfig { accumulation: 3, ..base.opt },
            ..base.clone()
        },
        TrainConfig { initial: InitialModels::Shared(ParamVector::zeros(2)), ..base.clone() },
    ];
    for cfg in bad {
        assert!(run_training(cfg).is_err());
    }
}
