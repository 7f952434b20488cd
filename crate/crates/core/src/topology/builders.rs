use super::{MixingMatrix, MixingSchedule, TopologyKind};
use crate::error::{Error, Result};

/// Complete graph: every entry `1/N`, period 1.
pub fn make_complete(workers: usize) -> Result<MixingSchedule> {
    if workers == 0 {
        return Err(Error::param("complete topology needs at least one worker"));
    }
    Ok(MixingSchedule::from_parts(
        TopologyKind::Complete,
        1,
        vec![MixingMatrix::complete(workers)],
    ))
}

fn matching(workers: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<MixingMatrix> {
    let groups: Vec<Vec<usize>> = pairs
        .into_iter()
        .map(|(a, b)| if a == b { vec![a] } else { vec![a, b] })
        .collect();
    MixingMatrix::from_groups(workers, &groups)
}

/// One-peer ring: round 1 pairs `(2k, 2k+1)`, round 2 pairs
/// `(2k+1, 2k+2 mod N)`. Matched pairs average with weight 1/2 each.
pub fn make_one_peer_ring(workers: usize) -> Result<MixingSchedule> {
    if workers < 2 || !workers.is_multiple_of(2) {
        return Err(Error::param(format!(
            "one-peer ring needs an even worker count >= 2, got {workers}"
        )));
    }
    let even = matching(workers, (0..workers / 2).map(|k| (2 * k, 2 * k + 1)))?;
    let odd = if workers == 2 {
        even.clone()
    } else {
        matching(
            workers,
            (0..workers / 2).map(|k| (2 * k + 1, (2 * k + 2) % workers)),
        )?
    };
    Ok(MixingSchedule::from_parts(
        TopologyKind::OnePeerRing,
        1,
        vec![even, odd],
    ))
}

/// One-peer exponential graph: in round `r` worker `i` averages with
/// `i XOR 2^(r-1)`; period `log2 N`.
pub fn make_one_peer_exponential(workers: usize) -> Result<MixingSchedule> {
    if workers == 0 || !workers.is_power_of_two() {
        return Err(Error::param(format!(
            "one-peer exponential graph needs a power-of-two worker count, got {workers}"
        )));
    }
    if workers == 1 {
        return Ok(MixingSchedule::from_parts(
            TopologyKind::OnePeerExponential,
            1,
            vec![MixingMatrix::identity(1)],
        ));
    }
    let rounds = (0..workers.trailing_zeros())
        .map(|r| {
            let hop = 1usize << r;
            matching(
                workers,
                (0..workers).filter(|i| i & hop == 0).map(|i| (i, i ^ hop)),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MixingSchedule::from_parts(
        TopologyKind::OnePeerExponential,
        1,
        rounds,
    ))
}

/// Node pairs merged by the alternating exponential ring, one per round.
fn aer_merge_order(nodes: usize) -> Vec<(usize, usize)> {
    if nodes == 4 {
        return vec![(2, 3), (0, 1), (0, 2), (1, 3)];
    }
    let mut order = Vec::new();
    let mut hop = 1;
    while hop < nodes {
        order.extend((0..nodes).filter(|j| j & hop == 0).map(|j| (j, j + hop)));
        hop <<= 1;
    }
    order
}

/// Alternating exponential ring over `workers / workers_per_node` nodes.
///
/// Every round each node averages its own workers exactly, except one node
/// pair whose workers are averaged together as a single group. Pairs follow
/// hop distances `1, 2, 4, ..., M/2`; for four nodes the order is
/// `(2,3), (0,1), (0,2), (1,3)`.
pub fn make_aer(workers: usize, workers_per_node: usize) -> Result<MixingSchedule> {
    if workers_per_node == 0 || workers == 0 || !workers.is_multiple_of(workers_per_node) {
        return Err(Error::param(format!(
            "workers_per_node {workers_per_node} must divide worker count {workers}"
        )));
    }
    let nodes = workers / workers_per_node;
    if nodes < 2 || !nodes.is_power_of_two() {
        return Err(Error::param(format!(
            "AER needs a power-of-two node count >= 2, got {nodes}"
        )));
    }
    let node_members = |n: usize| n * workers_per_node..(n + 1) * workers_per_node;
    let rounds = aer_merge_order(nodes)
        .into_iter()
        .map(|(a, b)| {
            let mut groups: Vec<Vec<usize>> = Vec::with_capacity(nodes - 1);
            for node in 0..nodes {
                if node == a {
                    groups.push(node_members(a).chain(node_members(b)).collect());
                } else if node != b {
                    groups.push(node_members(node).collect());
                }
            }
            MixingMatrix::from_groups(workers, &groups)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MixingSchedule::from_parts(
        TopologyKind::Aer,
        workers_per_node,
        rounds,
    ))
}
