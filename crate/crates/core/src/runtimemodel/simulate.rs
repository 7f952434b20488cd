use super::params::{RuntimeParams, SpeedDraws};
use super::timeline::{Durations, SimMode, Timeline};
use crate::error::{Error, Result};
use crate::topology::MixingSchedule;

fn check_draws(params: &RuntimeParams, draws: &SpeedDraws) -> Result<()> {
    params.validate()?;
    if draws.workers() != params.workers {
        return Err(Error::param(format!(
            "speed draws cover {} workers, params have {}",
            draws.workers(),
            params.workers
        )));
    }
    if draws.iterations() == 0 {
        return Err(Error::param("need at least one iteration"));
    }
    Ok(())
}

/// All-Reduce training with bucketed backward/communication overlap.
///
/// ```text
/// F   = U(t-1) + p b/N
/// B_b = F + p 2/N,              B_k = B_(k+1) + p 2/N
/// C_b = gamma + max_j B_b(j),   C_k = gamma + max_j max(B_k(j), C_(k+1)(j))
/// U   = C_1 + theta b
/// ```
pub fn simulate_allreduce(params: &RuntimeParams, draws: &SpeedDraws) -> Result<Timeline> {
    check_draws(params, draws)?;
    let (n, nb) = (params.workers, params.buckets);
    let durations = Durations {
        forward: params.allreduce_forward(),
        backward: params.bucket_backward(),
        update: params.theta * nb as f64,
        comm: params.gamma,
    };
    let mut tl = Timeline::new(SimMode::AllReduce, n, nb, durations, draws.clone());
    for t in 1..=tl.iterations {
        for i in 0..n {
            let p = draws.get(i, t);
            let f = tl.finish(i, t - 1) + p * durations.forward;
            let r = tl.row(i, t);
            tl.f[r] = f;
            let mut prev = f;
            for k in (1..=nb).rev() {
                prev += p * durations.backward;
                let s = tl.slot(i, t, k);
                tl.b[s] = prev;
            }
        }
        // the collective completes at the same time on every worker
        let mut next_comm = f64::NEG_INFINITY;
        for k in (1..=nb).rev() {
            let ready = (0..n)
                .map(|j| tl.backward(j, t, k).max(next_comm))
                .fold(f64::NEG_INFINITY, f64::max);
            let c = params.gamma + ready;
            for i in 0..n {
                let s = tl.slot(i, t, k);
                tl.c[s] = c;
            }
            next_comm = c;
        }
        for i in 0..n {
            let r = tl.row(i, t);
            tl.u[r] = tl.comm(i, t, 1) + durations.update;
        }
        tl.close_iteration(t);
    }
    Ok(tl)
}

/// Decentralized training: each bucket is updated as soon as its gradient
/// and the previous round's gossip are ready, and gossip runs with the
/// neighbors `{j : w_ij > 0}` of the round's mixing matrix.
///
/// ```text
/// F   = U_1(t-1) + p/N
/// B_b = F + p 2/N,         B_k = U_(k+1) + p 2/N
/// U_k = max(B_k, C_k(t-1)) + theta
/// C_b = omega gamma + max_j max(U_b(j), C_1(j, t-1))
/// C_k = omega gamma + max_j max(U_k(j), C_(k+1)(j))
/// ```
pub fn simulate_decentralized(
    params: &RuntimeParams,
    schedule: &MixingSchedule,
    draws: &SpeedDraws,
) -> Result<Timeline> {
    simulate_gossip(params, schedule, draws, SimMode::Decentralized)
}

/// Like [`simulate_decentralized`] but the update of bucket `k` waits for the
/// backward pass and previous gossip of every worker in the same node:
/// `U_k = max_{j in node(i)} max(B_k(j), C_k(j, t-1)) + theta`. The
/// intra-node broadcast is free.
pub fn simulate_sgp_variant(
    params: &RuntimeParams,
    schedule: &MixingSchedule,
    draws: &SpeedDraws,
) -> Result<Timeline> {
    simulate_gossip(params, schedule, draws, SimMode::Sgp)
}

fn simulate_gossip(
    params: &RuntimeParams,
    schedule: &MixingSchedule,
    draws: &SpeedDraws,
    mode: SimMode,
) -> Result<Timeline> {
    check_draws(params, draws)?;
    if schedule.workers() != params.workers {
        return Err(Error::param(format!(
            "schedule has {} workers, params have {}",
            schedule.workers(),
            params.workers
        )));
    }
    let (n, nb) = (params.workers, params.buckets);
    let wpn = if mode == SimMode::Sgp { params.workers_per_node } else { 1 };
    let durations = Durations {
        forward: params.decentralized_forward(),
        backward: params.bucket_backward(),
        update: params.theta,
        comm: params.gossip_time(),
    };
    let neighbors: Vec<Vec<Vec<usize>>> = (1..=schedule.period())
        .map(|t| {
            let w = schedule.matrix_at(t);
            (0..n).map(|i| w.neighbors(i)).collect()
        })
        .collect();
    let mut tl = Timeline::new(mode, n, nb, durations, draws.clone());
    for t in 1..=tl.iterations {
        let nbrs = &neighbors[(t - 1) % neighbors.len()];
        for i in 0..n {
            let p = draws.get(i, t);
            let r = tl.row(i, t);
            tl.f[r] = tl.finish(i, t - 1) + p * durations.forward;
        }
        for k in (1..=nb).rev() {
            for i in 0..n {
                let p = draws.get(i, t);
                let before = if k == nb { tl.forward(i, t) } else { tl.update(i, t, k + 1) };
                let s = tl.slot(i, t, k);
                tl.b[s] = before + p * durations.backward;
            }
            for i in 0..n {
                let node = (i / wpn) * wpn;
                let ready = (node..node + wpn)
                    .map(|j| tl.backward(j, t, k).max(tl.comm(j, t - 1, k)))
                    .fold(f64::NEG_INFINITY, f64::max);
                let s = tl.slot(i, t, k);
                tl.u[s] = ready + durations.update;
            }
            let mut comm = vec![0.0; n];
            for (i, c) in comm.iter_mut().enumerate() {
                let ready = nbrs[i]
                    .iter()
                    .map(|&j| {
                        let chain = if k == nb { tl.comm(j, t - 1, 1) } else { tl.comm(j, t, k + 1) };
                        tl.update(j, t, k).max(chain)
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                *c = durations.comm + ready;
            }
            for (i, c) in comm.into_iter().enumerate() {
                let s = tl.slot(i, t, k);
                tl.c[s] = c;
            }
        }
        tl.close_iteration(t);
    }
    Ok(tl)
}
