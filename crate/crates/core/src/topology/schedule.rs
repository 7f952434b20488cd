use std::fmt;
use std::str::FromStr;

use super::MixingMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopologyKind {
    Complete,
    OnePeerRing,
    OnePeerExponential,
    /// Alternating exponential ring.
    Aer,
    Custom,
}

impl TopologyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TopologyKind::Complete => "complete",
            TopologyKind::OnePeerRing => "one_peer_ring",
            TopologyKind::OnePeerExponential => "one_peer_exponential",
            TopologyKind::Aer => "aer",
            TopologyKind::Custom => "custom",
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complete" => Ok(TopologyKind::Complete),
            "one_peer_ring" => Ok(TopologyKind::OnePeerRing),
            "one_peer_exponential" => Ok(TopologyKind::OnePeerExponential),
            "aer" => Ok(TopologyKind::Aer),
            other => Err(Error::param(format!("unknown topology kind `{other}`"))),
        }
    }
}

/// Periodic sequence of gossip rounds over `workers` workers laid out
/// `workers_per_node` to a node.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingSchedule {
    kind: TopologyKind,
    workers: usize,
    workers_per_node: usize,
    rounds: Vec<MixingMatrix>,
}

impl MixingSchedule {
    pub(crate) fn from_parts(
        kind: TopologyKind,
        workers_per_node: usize,
        rounds: Vec<MixingMatrix>,
    ) -> Self {
        let workers = rounds[0].workers();
        Self {
            kind,
            workers,
            workers_per_node,
            rounds,
        }
    }

    /// Schedule from arbitrary rounds. Connectivity is not required; see
    /// [`MixingSchedule::is_connected`].
    pub fn custom(rounds: Vec<MixingMatrix>, workers_per_node: usize) -> Result<Self> {
        let first = rounds
            .first()
            .ok_or_else(|| Error::param("a schedule needs at least one round"))?;
        let n = first.workers();
        if rounds.iter().any(|w| w.workers() != n) {
            return Err(Error::param("all rounds must have the same worker count"));
        }
        if workers_per_node == 0 || n % workers_per_node != 0 {
            return Err(Error::param(format!(
                "workers_per_node {workers_per_node} must divide {n}"
            )));
        }
        Ok(Self::from_parts(TopologyKind::Custom, workers_per_node, rounds))
    }

    /// A fixed matrix used every round.
    pub fn fixed(matrix: MixingMatrix) -> Self {
        Self::from_parts(TopologyKind::Custom, 1, vec![matrix])
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn workers_per_node(&self) -> usize {
        self.workers_per_node
    }

    pub fn nodes(&self) -> usize {
        self.workers / self.workers_per_node
    }

    pub fn period(&self) -> usize {
        self.rounds.len()
    }

    pub fn rounds(&self) -> &[MixingMatrix] {
        &self.rounds
    }

    /// Matrix used in round `t`, counting from 1.
    pub fn matrix_at(&self, t: usize) -> &MixingMatrix {
        debug_assert!(t >= 1, "rounds are numbered from 1");
        &self.rounds[(t.max(1) - 1) % self.rounds.len()]
    }

    /// Whether the union of one period's communication graphs is connected.
    pub fn is_connected(&self) -> bool {
        let n = self.workers;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for w in &self.rounds {
            for i in 0..n {
                for j in (i + 1)..n {
                    if w.weight(i, j) > 0.0 {
                        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                        parent[a] = b;
                    }
                }
            }
        }
        let root = find(&mut parent, 0);
        (0..n).all(|i| find(&mut parent, i) == root)
    }
}
