use std::sync::Arc;

use desklab::common::ParamVector;
use desklab::optim::{OptimizerConfig, OptimizerKind};
use desklab::problems::{make_logistic, make_quadratic, Problem, SyntheticDataset};
use desklab::topology::{make_complete, make_one_peer_exponential, MixingMatrix, MixingSchedule};
use desklab::trainsim::{
    check_bound, evaluate_theorem1_bound, evaluate_theorem2_bound, BoundInputs, TauMode, TrainConfig,
    BatchMode, InitialModels,
};
use desklab::Error;
use nalgebra::{DMatrix, DVector};

fn spot() -> BoundInputs {
    BoundInputs {
        alpha: 1e-3,
        beta1: 0.9,
        beta2: 0.999,
        eps: 1e-8,
        r: 1.0,
        l: 1.0,
        d: 10.0,
        lambda: 0.0,
        iterations: 1000,
        f_gap: 1.0,
    }
}

/// Second transcription of the momentum bound, grouped by shared factors.
fn momentum_rhs(i: &BoundInputs) -> f64 {
    let q = 1.0 - i.beta1 / i.beta2;
    let one_b1 = 1.0 - i.beta1;
    let one_b2 = 1.0 - i.beta2;
    let lam2 = i.lambda * i.lambda;
    let e = i.d
        * (24.0 * i.r * i.r * one_b1.sqrt() / (one_b2.sqrt() * q * q.sqrt())
            + 2.0 * i.alpha * i.l * i.r * one_b1 / (one_b2 * q)
            + 4.0 * i.alpha * i.alpha * i.l * i.l * i.beta1 / (q * one_b2 * one_b2.sqrt())
            + 8.0 * i.alpha * i.alpha * (1.0 + lam2) * i.r * i.l * i.l * one_b1.sqrt()
                / ((1.0 - lam2) * (1.0 - lam2) * one_b2 * q * i.eps.sqrt()));
    let t = i.iterations as f64;
    let tt = t - i.beta1 / one_b1;
    (4.0 * i.r * i.f_gap / i.alpha + e * (1.0 + i.r / (i.eps * one_b2)).ln() - e * t * i.beta2.ln()) / tt
}

fn plain_rhs(i: &BoundInputs) -> f64 {
    let one_b2 = 1.0 - i.beta2;
    let lam2 = i.lambda * i.lambda;
    let e = i.d
        * i.r
        * (8.0 * i.r / one_b2.sqrt()
            + 2.0 * i.alpha * i.l / one_b2
            + 8.0 * i.alpha * i.alpha * (1.0 + lam2) * i.l * i.l
                / ((1.0 - lam2) * (1.0 - lam2) * one_b2 * one_b2.sqrt() * i.eps.sqrt()));
    let t = i.iterations as f64;
    (4.0 * i.r * i.f_gap / i.alpha + e * (1.0 + i.r * i.r / (i.eps * one_b2)).ln()) / t - e * i.beta2.ln()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn momentum_bound_double_transcription() {
    let cases = [
        spot(),
        BoundInputs { lambda: 0.7, l: 2.5, ..spot() },
        BoundInputs { beta1: 0.5, beta2: 0.99, iterations: 37, f_gap: 0.3, ..spot() },
        BoundInputs { alpha: 0.1, eps: 1e-4, r: 1.01, d: 3.0, ..spot() },
    ];
    for i in cases {
        let r = evaluate_theorem1_bound(&i).unwrap();
        assert!(rel(r.rhs, momentum_rhs(&i)) < 1e-9, "{i:?}");
        assert_eq!(r.e_terms.len(), 4);
        assert!((r.t_tilde - (i.iterations as f64 - i.beta1 / (1.0 - i.beta1))).abs() < 1e-12);
        assert!(r.rhs >= 0.0);
    }
}

#[test]
fn plain_bound_double_transcription() {
    for i in [
        BoundInputs { beta1: 0.0, ..spot() },
        BoundInputs { beta1: 0.0, lambda: 0.5, iterations: 100, ..spot() },
        BoundInputs { beta1: 0.0, beta2: 0.9, alpha: 0.05, ..spot() },
    ] {
        let r = evaluate_theorem2_bound(&i).unwrap();
        assert!(rel(r.rhs, plain_rhs(&i)) < 1e-9, "{i:?}");
        assert_eq!(r.e_terms.len(), 3);
    }
}

fn logistic(n: usize, eps: f64) -> Arc<dyn Problem> {
    Arc::new(make_logistic(SyntheticDataset::generate(n, 10, 3).unwrap(), eps).unwrap())
}

fn bound_config(workers: usize, beta1: f64, beta2: f64, iterations: usize) -> TrainConfig {
    TrainConfig {
        workers,
        iterations,
        schedule: make_complete(workers).unwrap(),
        optimizer: OptimizerKind::DAdam,
        opt: OptimizerConfig { alpha: 1e-2, beta1, beta2, ..OptimizerConfig::default() },
        problem: logistic(256, 1e-8),
        batch: BatchMode::Global(8 * workers),
        seed: 100,
        initial: InitialModels::Shared(ParamVector::zeros(10)),
        parallel: false,
    }
}

#[test]
fn single_worker_bound_holds() {
    let check = check_bound(&bound_config(1, 0.9, 0.999, 200), 4, TauMode::Exact).unwrap();
    assert!(check.holds(), "{}", check.report);
    assert_eq!(check.report.inputs.lambda, 0.0);
}

#[test]
fn eight_worker_bound_holds_with_margin() {
    let check = check_bound(&bound_config(8, 0.9, 0.999, 500), 10, TauMode::Sampled).unwrap();
    assert!(check.holds());
    println!("margin {} (lhs {}, rhs {})", check.margin(), check.lhs(), check.rhs());
    assert_eq!(check.per_seed.len(), 10);
    let text = check.report.to_string();
    assert!(text.contains("result: PASS"));
}

#[test]
fn zero_momentum_uses_plain_bound() {
    let check = check_bound(&bound_config(4, 0.0, 0.99, 100), 2, TauMode::Exact).unwrap();
    assert_eq!(check.report.e_terms.len(), 3);
    assert!(check.holds());
}

#[test]
fn exact_and_sampled_estimates_agree_on_average() {
    let cfg = bound_config(4, 0.5, 0.99, 60);
    let exact = check_bound(&cfg, 40, TauMode::Exact).unwrap();
    let sampled = check_bound(&cfg, 40, TauMode::Sampled).unwrap();
    // same trainings, different weighting of iterates
    assert_eq!(exact.report.rhs, sampled.report.rhs);
    let spread = exact.per_seed.iter().cloned().fold(0.0, f64::max);
    assert!((exact.lhs() - sampled.lhs()).abs() < spread, "{} vs {}", exact.lhs(), sampled.lhs());
}

#[test]
fn rejects_time_varying_schedules() {
    let cfg = TrainConfig { schedule: make_one_peer_exponential(4).unwrap(), ..bound_config(4, 0.9, 0.999, 20) };
    assert!(matches!(check_bound(&cfg, 1, TauMode::Exact), Err(Error::InvalidSetup(_))));
}

#[test]
fn rejects_problems_without_gradient_bound() {
    let a = DMatrix::from_fn(20, 10, |i, j| ((i as f64 + 1.0) * (j as f64 + 1.3)).sin());
    let b = DVector::from_fn(20, |i, _| i as f64 / 20.0);
    let cfg = TrainConfig {
        problem: Arc::new(make_quadratic(a, b).unwrap()),
        ..bound_config(4, 0.9, 0.999, 20)
    };
    assert!(matches!(check_bound(&cfg, 1, TauMode::Exact), Err(Error::InvalidSetup(_))));
}

#[test]
fn rejects_other_optimizers() {
    let cfg = TrainConfig { optimizer: OptimizerKind::Dsgd, ..bound_config(4, 0.9, 0.999, 20) };
    assert!(matches!(check_bound(&cfg, 1, TauMode::Exact), Err(Error::InvalidSetup(_))));
}

#[test]
fn rejects_disconnected_mixing() {
    let cfg = TrainConfig {
        schedule: MixingSchedule::fixed(MixingMatrix::identity(4)),
        ..bound_config(4, 0.9, 0.999, 20)
    };
    assert!(matches!(check_bound(&cfg, 1, TauMode::Exact), Err(Error::InvalidSetup(_))));
}

#[test]
fn detects_gradient_bound_violation() {
    // R - sqrt(eps) = 1 + 1e-4 - 0.9 is below typical logistic gradients
    let mut cfg = bound_config(2, 0.9, 0.999, 20);
    cfg.opt.eps = 0.81;
    assert!(matches!(check_bound(&cfg, 1, TauMode::Exact), Err(Error::InvalidSetup(_))));
}
