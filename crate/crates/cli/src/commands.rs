use rayon::prelude::*;

use desklab::common::{ParamVector, Purpose, StreamRng};
use desklab::optim::{OptimizerConfig, OptimizerKind};
use desklab::problems::{make_logistic, make_random_quadratic, Problem, SyntheticDataset};
use desklab::runtimemodel::{
    export_timeline, replicate_runtimes, simulate_allreduce, simulate_decentralized,
    simulate_sgp_variant, write_sweep_csv, ForwardMode, RuntimeParams, SpeedDraws, SweepRow,
};
use desklab::topology::{
    gossip_consensus, make_aer, make_complete, make_one_peer_exponential, make_one_peer_ring,
    MixingSchedule, TopologyKind,
};
use desklab::trainsim::{
    check_bound, evaluate_theorem1_bound, evaluate_theorem2_bound, run_training, BatchMode,
    BoundInputs, InitialModels, TauMode, TrainConfig,
};
use std::sync::Arc;

use crate::config::{BoundSection, ExperimentConfig, RuntimeSection, TopologySection};
use crate::error::CliError;
use crate::output::Artifact;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub seed: u64,
    pub jobs: usize,
}

/// Files produced by a command, summary lines for the manifest, and an
/// optional failure to report after the files are written.
#[derive(Debug, Default)]
pub struct CommandOutput {
    pub artifacts: Vec<Artifact>,
    pub summary: Vec<(String, String)>,
    pub failure: Option<CliError>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn build_schedule(kind: &str, workers: usize, workers_per_node: usize) -> Result<MixingSchedule, CliError> {
    let kind: TopologyKind = kind.parse()?;
    let schedule = match kind {
        TopologyKind::Complete => make_complete(workers)?,
        TopologyKind::OnePeerRing => make_one_peer_ring(workers)?,
        TopologyKind::OnePeerExponential => make_one_peer_exponential(workers)?,
        TopologyKind::Aer => make_aer(workers, workers_per_node)?,
        TopologyKind::Custom => return Err(config_err("custom topologies cannot be built from a config")),
    };
    Ok(schedule)
}

fn single_schedule(topology: &TopologySection) -> Result<MixingSchedule, CliError> {
    let names = topology.kind.names();
    if names.len() != 1 {
        return Err(config_err(format!(
            "topology.kind must name exactly one topology here, got {}",
            names.len()
        )));
    }
    build_schedule(names[0], topology.workers, topology.workers_per_node)
}

pub fn cmd_consensus(cfg: &ExperimentConfig, opts: RunOptions) -> Result<CommandOutput, CliError> {
    let topology = ExperimentConfig::require(&cfg.topology, "topology")?;
    let section = cfg.consensus.clone().unwrap_or(crate::config::ConsensusSection { rounds: 10, dim: 4 });
    if section.dim == 0 {
        return Err(config_err("consensus.dim must be positive"));
    }
    let n = topology.workers;
    let initial: Vec<ParamVector> = (0..n)
        .map(|i| {
            let mut rng = StreamRng::keyed(opts.seed, Purpose::InitialModel, i, 0);
            ParamVector::new((0..section.dim).map(|_| 2.0 * rng.uniform() - 1.0).collect())
        })
        .collect::<desklab::Result<_>>()?;
    let names = topology.kind.names();
    if names.is_empty() {
        return Err(config_err("topology.kind lists no topologies"));
    }
    let mut out = CommandOutput::default();
    let mut columns = Vec::new();
    for name in &names {
        let schedule = build_schedule(name, n, topology.workers_per_node)?;
        let traj = gossip_consensus(&schedule, &initial, section.rounds)?;
        out.artifacts.push(Artifact::build(format!("consensus_{name}.csv"), |w| traj.write_csv(w))?);
        out.summary.push((format!("result.{name}.final_error"), format!("{:?}", traj.errors[section.rounds])));
        columns.push(traj.errors);
    }
    let mut merged = String::from("round");
    for name in &names {
        merged.push(',');
        merged.push_str(name);
    }
    merged.push('\n');
    for r in 0..=section.rounds {
        merged.push_str(&r.to_string());
        for c in &columns {
            merged.push(',');
            merged.push_str(&format!("{:?}", c[r]));
        }
        merged.push('\n');
    }
    out.artifacts.push(Artifact::new("consensus.csv", merged.into_bytes()));
    Ok(out)
}

fn runtime_base(topology: &TopologySection, section: &RuntimeSection) -> Result<RuntimeParams, CliError> {
    if section.gamma.is_empty() || section.omega.is_empty() || section.sigma2.is_empty() {
        return Err(config_err("runtime grids (gamma, omega, sigma2) must be non-empty"));
    }
    if section.gamma.iter().any(|&g| !(g > 0.0)) {
        return Err(config_err("runtime.gamma values must be positive"));
    }
    if !(section.theta > 0.0) {
        return Err(config_err("runtime.theta must be positive"));
    }
    if section.iterations == 0 || section.replicates == 0 {
        return Err(config_err("runtime.iterations and runtime.replicates must be positive"));
    }
    let forward: ForwardMode = section.forward.parse()?;
    let params = RuntimeParams {
        workers: topology.workers,
        buckets: section.buckets,
        theta: section.theta,
        gamma: section.gamma[0],
        omega: section.omega[0],
        sigma2: section.sigma2[0],
        workers_per_node: topology.workers_per_node,
        allow_omega_above_one: section.allow_omega_above_one,
        forward,
        work_divisor: section.work_divisor,
    };
    params.validate()?;
    Ok(params)
}

fn gantt_artifacts(
    params: &RuntimeParams,
    schedule: &MixingSchedule,
    iterations: usize,
    mode: &str,
    seed: u64,
) -> Result<Vec<Artifact>, CliError> {
    if iterations == 0 {
        return Err(config_err("timeline.iterations must be positive"));
    }
    let modes: Vec<&str> = match mode {
        "all" => vec!["allreduce", "decentralized", "sgp"],
        "allreduce" | "decentralized" | "sgp" => vec![mode],
        other => return Err(config_err(format!("unknown timeline mode `{other}`"))),
    };
    let draws = SpeedDraws::sample(seed, params.workers, iterations, params.sigma2)?;
    modes
        .into_iter()
        .map(|m| {
            let tl = match m {
                "allreduce" => simulate_allreduce(params, &draws)?,
                "decentralized" => simulate_decentralized(params, schedule, &draws)?,
                _ => simulate_sgp_variant(params, schedule, &draws)?,
            };
            Artifact::build(format!("gantt_{m}.csv"), |w| export_timeline(&tl, w))
        })
        .collect()
}

pub fn cmd_runtime(cfg: &ExperimentConfig, opts: RunOptions) -> Result<CommandOutput, CliError> {
    let topology = ExperimentConfig::require(&cfg.topology, "topology")?;
    let section = ExperimentConfig::require(&cfg.runtime, "runtime")?;
    let base = runtime_base(topology, section)?;
    let schedule = single_schedule(topology)?;
    let mut grid = Vec::new();
    for &gamma in &section.gamma {
        for &omega in &section.omega {
            for &sigma2 in &section.sigma2 {
                let p = RuntimeParams { gamma, omega, sigma2, ..base };
                p.validate()?;
                grid.push(p);
            }
        }
    }
    let rows: Vec<Vec<SweepRow>> = grid
        .par_iter()
        .map(|p| {
            let runs = replicate_runtimes(p, &schedule, section.iterations, section.replicates, opts.seed)?;
            SweepRow::from_runs(p, &runs)
        })
        .collect::<desklab::Result<_>>()?;
    let rows: Vec<SweepRow> = rows.into_iter().flatten().collect();
    let mut out = CommandOutput::default();
    out.artifacts.push(Artifact::build("sweep.csv", |w| write_sweep_csv(&rows, w))?);
    let timeline = cfg.timeline.clone().unwrap_or(crate::config::TimelineSection {
        iterations: 3,
        mode: "all".into(),
    });
    out.artifacts
        .extend(gantt_artifacts(&base, &schedule, timeline.iterations, &timeline.mode, opts.seed)?);
    out.summary.push(("result.grid_points".into(), grid.len().to_string()));
    out.summary.push(("result.rows".into(), rows.len().to_string()));
    Ok(out)
}

pub fn cmd_timeline(cfg: &ExperimentConfig, opts: RunOptions) -> Result<CommandOutput, CliError> {
    let topology = ExperimentConfig::require(&cfg.topology, "topology")?;
    let section = ExperimentConfig::require(&cfg.runtime, "runtime")?;
    let timeline = ExperimentConfig::require(&cfg.timeline, "timeline")?;
    let params = runtime_base(topology, section)?;
    let schedule = single_schedule(topology)?;
    let artifacts = gantt_artifacts(&params, &schedule, timeline.iterations, &timeline.mode, opts.seed)?;
    Ok(CommandOutput {
        artifacts,
        ..Default::default()
    })
}

/// Training setup shared by `train` and `bound` in check mode.
pub fn build_train_config(cfg: &ExperimentConfig, opts: RunOptions) -> Result<TrainConfig, CliError> {
    let topology = ExperimentConfig::require(&cfg.topology, "topology")?;
    let problem = ExperimentConfig::require(&cfg.problem, "problem")?;
    let optimizer = ExperimentConfig::require(&cfg.optimizer, "optimizer")?;
    let train = ExperimentConfig::require(&cfg.train, "train")?;
    let schedule = single_schedule(topology)?;
    let kind: OptimizerKind = optimizer.kind.parse()?;
    let opt = OptimizerConfig {
        alpha: optimizer.alpha,
        beta1: optimizer.beta1,
        beta2: optimizer.beta2,
        eps: optimizer.eps,
        accumulation: optimizer.accumulation,
        vhat_uses_beta1: optimizer.vhat_uses_beta1,
        horizon: None,
    };
    let data_seed = problem.data_seed.unwrap_or(opts.seed);
    let built: Arc<dyn Problem> = match problem.kind.as_str() {
        "logistic" => {
            let data = SyntheticDataset::generate(problem.samples, problem.dim, data_seed)?;
            Arc::new(make_logistic(data, problem.eps.unwrap_or(opt.eps))?)
        }
        "quadratic" => {
            if problem.eps.is_some() {
                return Err(config_err("problem.eps only applies to the logistic problem"));
            }
            Arc::new(make_random_quadratic(problem.samples, problem.dim, data_seed)?)
        }
        other => return Err(config_err(format!("unknown problem kind `{other}`"))),
    };
    if !(train.init_spread >= 0.0) || !train.init.is_finite() {
        return Err(config_err("train.init must be finite and train.init_spread >= 0"));
    }
    let dim = built.dim();
    let initial = if train.init_spread > 0.0 {
        InitialModels::PerWorker(
            (0..topology.workers)
                .map(|i| {
                    let mut rng = StreamRng::keyed(opts.seed, Purpose::InitialModel, i, 0);
                    ParamVector::new(
                        (0..dim)
                            .map(|_| train.init + train.init_spread * (2.0 * rng.uniform() - 1.0))
                            .collect(),
                    )
                })
                .collect::<desklab::Result<_>>()?,
        )
    } else {
        InitialModels::Shared(ParamVector::filled(dim, train.init))
    };
    let tc = TrainConfig {
        workers: topology.workers,
        iterations: train.iterations,
        schedule,
        optimizer: kind,
        opt,
        problem: built,
        batch: train.global_batch.map_or(BatchMode::FullPerWorker, BatchMode::Global),
        seed: opts.seed,
        initial,
        parallel: opts.jobs > 1,
    };
    tc.validate()?;
    Ok(tc)
}

pub fn cmd_train(cfg: &ExperimentConfig, opts: RunOptions) -> Result<CommandOutput, CliError> {
    let tc = build_train_config(cfg, opts)?;
    let optimal = tc.problem.optimal_value();
    let log = run_training(tc)?;
    let mut out = CommandOutput::default();
    out.artifacts.push(Artifact::build("metrics.csv", |w| log.write_csv(w))?);
    let last = |v: &[f64]| format!("{:?}", v.last().copied().unwrap_or(f64::NAN));
    out.summary.push(("result.final_loss".into(), last(&log.loss)));
    out.summary.push(("result.final_grad_norm_sq".into(), last(&log.grad_norm_sq)));
    out.summary.push(("result.final_consensus_error".into(), last(&log.consensus_error)));
    out.summary.push(("result.optimal_value".into(), format!("{optimal:?}")));
    Ok(out)
}

fn evaluate_inputs(b: &BoundSection) -> Result<BoundInputs, CliError> {
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| config_err(format!("bound.{name} is required in evaluate mode")));
    Ok(BoundInputs {
        alpha: need(b.alpha, "alpha")?,
        beta1: need(b.beta1, "beta1")?,
        beta2: need(b.beta2, "beta2")?,
        eps: need(b.eps, "eps")?,
        r: need(b.r, "r")?,
        l: need(b.l, "l")?,
        d: need(b.d, "d")?,
        lambda: need(b.lambda, "lambda")?,
        iterations: b.iterations.ok_or_else(|| config_err("bound.iterations is required in evaluate mode"))?,
        f_gap: need(b.f_gap, "f_gap")?,
    })
}

pub fn cmd_bound(cfg: &ExperimentConfig, opts: RunOptions) -> Result<CommandOutput, CliError> {
    let b = ExperimentConfig::require(&cfg.bound, "bound")?;
    let mut out = CommandOutput::default();
    match b.mode.as_str() {
        "evaluate" => {
            let inputs = evaluate_inputs(b)?;
            let report = if inputs.beta1 > 0.0 {
                evaluate_theorem1_bound(&inputs)?
            } else {
                evaluate_theorem2_bound(&inputs)?
            };
            out.summary.push(("result.rhs".into(), report.rhs.to_string()));
            out.artifacts.push(Artifact::new("bound.txt", report.to_string().into_bytes()));
        }
        "check" => {
            let direct = [b.alpha, b.beta1, b.beta2, b.eps, b.r, b.l, b.d, b.lambda, b.f_gap];
            if direct.iter().any(Option::is_some) || b.iterations.is_some() {
                return Err(config_err(
                    "check mode takes its constants from [problem], [optimizer] and [train]; remove the bound.* inputs",
                ));
            }
            let tau = match b.tau.as_str() {
                "exact" => TauMode::Exact,
                "sampled" => TauMode::Sampled,
                other => return Err(config_err(format!("unknown tau mode `{other}`"))),
            };
            let tc = build_train_config(cfg, opts)?;
            let check = check_bound(&tc, b.seeds, tau)?;
            let mut seeds = String::from("seed,estimate\n");
            for (s, e) in check.per_seed.iter().enumerate() {
                seeds.push_str(&format!("{},{e}\n", opts.seed.wrapping_add(s as u64)));
            }
            out.artifacts.push(Artifact::new("bound.txt", check.report.to_string().into_bytes()));
            out.artifacts.push(Artifact::new("bound_seeds.csv", seeds.into_bytes()));
            out.summary.push(("result.lhs".into(), check.lhs().to_string()));
            out.summary.push(("result.rhs".into(), check.rhs().to_string()));
            out.summary.push(("result.pass".into(), check.holds().to_string()));
            if !check.holds() {
                out.failure = Some(CliError::Invariant(format!(
                    "measured {} exceeds the bound {}",
                    check.lhs(),
                    check.rhs()
                )));
            }
        }
        other => return Err(config_err(format!("unknown bound mode `{other}` (expected evaluate or check)"))),
    }
    Ok(out)
}
