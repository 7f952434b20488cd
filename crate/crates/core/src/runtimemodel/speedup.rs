use std::io::Write;

use rayon::prelude::*;

use super::params::{RuntimeParams, SpeedDraws};
use super::simulate::{simulate_allreduce, simulate_decentralized, simulate_sgp_variant};
use crate::error::{Error, Result};
use crate::topology::MixingSchedule;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Best-case speedup of decentralized over All-Reduce training with
/// deterministic compute:
///
/// ```text
/// 1 + (1/b) N gamma / (3 + theta N)        gamma <= 2/N
/// 1 + (N gamma - 2 + 2/b) / (3 + theta N)  gamma >  2/N
/// ```
pub fn closed_form_speedup(gamma: f64, workers: usize, buckets: usize, theta: f64) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::param(format!("gamma must be positive, got {gamma}")));
    }
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::param(format!("theta must be positive, got {theta}")));
    }
    if workers == 0 || buckets == 0 {
        return Err(Error::param("N and b must be positive"));
    }
    let n = workers as f64;
    let b = buckets as f64;
    let denom = 3.0 + theta * n;
    Ok(if gamma <= 2.0 / n {
        1.0 + (1.0 / b) * (n * gamma) / denom
    } else {
        1.0 + (n * gamma - 2.0 + 2.0 / b) / denom
    })
}

/// Mean per-iteration runtime of every replicate, for each dependency model,
/// simulated on common speed draws. Replicate `r` uses seed `seed + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRuntimes {
    pub allreduce: Vec<f64>,
    pub decentralized: Vec<f64>,
    pub sgp: Vec<f64>,
}

pub fn replicate_runtimes(
    params: &RuntimeParams,
    schedule: &MixingSchedule,
    iterations: usize,
    replicates: usize,
    seed: u64,
) -> Result<ReplicateRuntimes> {
    params.validate()?;
    if replicates == 0 {
        return Err(Error::param("need at least one replicate"));
    }
    if iterations == 0 {
        return Err(Error::param("need at least one iteration"));
    }
    let rows: Vec<(f64, f64, f64)> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let draws = SpeedDraws::sample(
                seed.wrapping_add(r as u64),
                params.workers,
                iterations,
                params.sigma2,
            )?;
            let ar = simulate_allreduce(params, &draws)?.mean_runtime();
            let dec = simulate_decentralized(params, schedule, &draws)?.mean_runtime();
            let sgp = simulate_sgp_variant(params, schedule, &draws)?.mean_runtime();
            Ok((ar, dec, sgp))
        })
        .collect::<Result<_>>()?;
    let mut out = ReplicateRuntimes {
        allreduce: Vec::with_capacity(replicates),
        decentralized: Vec::with_capacity(replicates),
        sgp: Vec::with_capacity(replicates),
    };
    for (a, d, s) in rows {
        out.allreduce.push(a);
        out.decentralized.push(d);
        out.sgp.push(s);
    }
    Ok(out)
}

/// Sample mean and 95% normal half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: f64,
}

impl MeanCi {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let half_width = if xs.len() < 2 || xs.iter().all(|&x| x == xs[0]) {
            0.0
        } else {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            Z95 * (var / n).sqrt()
        };
        Self { mean, half_width }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedupEstimate {
    /// `mean(All-Reduce) / mean(decentralized)`.
    pub speedup: f64,
    /// 95% delta-method half-width of the ratio.
    pub half_width: f64,
    pub allreduce: MeanCi,
    pub decentralized: MeanCi,
    pub replicates: usize,
}

fn ratio_estimate(num: &[f64], den: &[f64]) -> SpeedupEstimate {
    let a = MeanCi::of(num);
    let d = MeanCi::of(den);
    let ratio = a.mean / d.mean;
    let n = num.len() as f64;
    let flat = |xs: &[f64]| xs.iter().all(|&x| x == xs[0]);
    let half_width = if num.len() < 2 || (flat(num) && flat(den)) {
        0.0
    } else {
        let (mut va, mut vd, mut cov) = (0.0, 0.0, 0.0);
        for (x, y) in num.iter().zip(den) {
            va += (x - a.mean).powi(2);
            vd += (y - d.mean).powi(2);
            cov += (x - a.mean) * (y - d.mean);
        }
        let (va, vd, cov) = (va / (n - 1.0), vd / (n - 1.0), cov / (n - 1.0));
        let var = (va - 2.0 * ratio * cov + ratio * ratio * vd) / (d.mean * d.mean * n);
        Z95 * var.max(0.0).sqrt()
    };
    SpeedupEstimate {
        speedup: ratio,
        half_width,
        allreduce: a,
        decentralized: d,
        replicates: num.len(),
    }
}

/// Speedup of decentralized over All-Reduce training, estimated from
/// `replicates` independent runs of `iterations` iterations each.
pub fn monte_carlo_speedup(
    params: &RuntimeParams,
    schedule: &MixingSchedule,
    iterations: usize,
    replicates: usize,
    seed: u64,
) -> Result<SpeedupEstimate> {
    let runs = replicate_runtimes(params, schedule, iterations, replicates, seed)?;
    Ok(ratio_estimate(&runs.allreduce, &runs.decentralized))
}

/// One line of a runtime sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub omega: f64,
    pub sigma2: f64,
    pub workers: usize,
    pub buckets: usize,
    pub theta: f64,
    pub mode: String,
    pub runtime_mean: f64,
    pub runtime_ci: f64,
    /// All-Reduce mean over this row's mean.
    pub speedup_mc: f64,
    pub speedup_closed_form: f64,
}

impl SweepRow {
    /// Rows for the All-Reduce, decentralized and intra-node coupled modes.
    pub fn from_runs(params: &RuntimeParams, runs: &ReplicateRuntimes) -> Result<Vec<SweepRow>> {
        let ar = MeanCi::of(&runs.allreduce);
        let closed = closed_form_speedup(params.gamma, params.workers, params.buckets, params.theta)?;
        Ok([
            ("allreduce", &runs.allreduce),
            ("decentralized", &runs.decentralized),
            ("sgp", &runs.sgp),
        ]
        .into_iter()
        .map(|(mode, xs)| {
            let s = MeanCi::of(xs);
            SweepRow {
                gamma: params.gamma,
                omega: params.omega,
                sigma2: params.sigma2,
                workers: params.workers,
                buckets: params.buckets,
                theta: params.theta,
                mode: mode.to_string(),
                runtime_mean: s.mean,
                runtime_ci: s.half_width,
                speedup_mc: ar.mean / s.mean,
                speedup_closed_form: closed,
            }
        })
        .collect())
    }
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "gamma",
        "omega",
        "sigma2",
        "N",
        "b",
        "theta",
        "mode",
        "runtime_mean",
        "runtime_ci",
        "speedup_mc",
        "speedup_closed_form",
    ])?;
    for r in rows {
        w.write_record([
            r.gamma.to_string(),
            r.omega.to_string(),
            r.sigma2.to_string(),
            r.workers.to_string(),
            r.buckets.to_string(),
            r.theta.to_string(),
            r.mode.clone(),
            r.runtime_mean.to_string(),
            r.runtime_ci.to_string(),
            r.speedup_mc.to_string(),
            r.speedup_closed_form.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
