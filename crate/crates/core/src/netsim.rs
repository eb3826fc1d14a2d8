//! Deterministic round-based message delivery between neighboring robots.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coalition::RobotId;
use crate::geometry::Point2;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TopologyKind {
    Complete,
    Disk { radius: f64 },
    Explicit,
}

/// Undirected communication graph. Adjacency lists are sorted and
/// symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    kind: TopologyKind,
    adjacency: Vec<Vec<RobotId>>,
}

impl Topology {
    pub fn complete(n: usize) -> Self {
        let adjacency = (0..n)
            .map(|i| (0..n).filter(|&j| j != i).map(RobotId).collect())
            .collect();
        Self {
            kind: TopologyKind::Complete,
            adjacency,
        }
    }

    /// Explicit edge list; duplicates and self-loops are dropped.
    pub fn explicit(n: usize, edges: &[(RobotId, RobotId)]) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a != b && a.0 < n && b.0 < n {
                adjacency[a.0].push(b);
                adjacency[b.0].push(a);
            }
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        Self {
            kind: TopologyKind::Explicit,
            adjacency,
        }
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbors(&self, i: RobotId) -> &[RobotId] {
        &self.adjacency[i.0]
    }

    pub fn are_neighbors(&self, a: RobotId, b: RobotId) -> bool {
        self.adjacency
            .get(a.0)
            .is_some_and(|adj| adj.binary_search(&b).is_ok())
    }

    pub fn edges(&self) -> Vec<(RobotId, RobotId)> {
        let mut out = Vec::new();
        for (i, adj) in self.adjacency.iter().enumerate() {
            out.extend(adj.iter().filter(|j| j.0 > i).map(|&j| (RobotId(i), j)));
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        if self.adjacency.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.adjacency.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in &self.adjacency[u] {
                if !seen[v.0] {
                    seen[v.0] = true;
                    stack.push(v.0);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Edge `(i, j)` iff `‖p_i − p_j‖ ≤ radius` and `i ≠ j`.
pub fn disk_topology<S: Scalar>(positions: &[Point2<S>], radius: S) -> Topology {
    let n = positions.len();
    let mut adjacency = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if positions[i].distance(positions[j]) <= radius {
                adjacency[i].push(RobotId(j));
                adjacency[j].push(RobotId(i));
            }
        }
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
    }
    Topology {
        kind: TopologyKind::Disk {
            radius: radius.as_f64(),
        },
        adjacency,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetConfig {
    pub delay_rounds: u64,
    pub drop_prob: f64,
    pub rng_seed: u64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            delay_rounds: 0,
            drop_prob: 0.0,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("robot {from} tried to send to non-neighbor {to}")]
    NotNeighbor { from: RobotId, to: RobotId },
    #[error("drop probability {0} outside [0, 1)")]
    BadDropProb(f64),
}

#[derive(Debug, Clone)]
pub struct Envelope<T> {
    pub from: RobotId,
    pub to: RobotId,
    pub payload: T,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NetStats {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    /// Messages accepted for sending in each completed round.
    pub per_round: Vec<u64>,
}

/// Single-threaded arbiter. Each call to [`deliver_round`](Self::deliver_round)
/// is one round: it accepts that round's outboxes and returns what every
/// robot receives at the end of it.
#[derive(Debug)]
pub struct NetworkSim<T> {
    topology: Topology,
    config: NetConfig,
    rng: ChaCha8Rng,
    round: u64,
    queue: BTreeMap<u64, Vec<Envelope<T>>>,
    stats: NetStats,
}

impl<T> NetworkSim<T> {
    pub fn new(topology: Topology, config: NetConfig) -> Result<Self, NetError> {
        if !(0.0..1.0).contains(&config.drop_prob) {
            return Err(NetError::BadDropProb(config.drop_prob));
        }
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.rng_seed),
            topology,
            config,
            round: 0,
            queue: BTreeMap::new(),
            stats: NetStats::default(),
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    /// Replaces the graph, e.g. after robots moved. Queued messages stay.
    pub fn set_topology(&mut self, topology: Topology) {
        self.topology = topology;
    }

    pub fn stats(&self) -> &NetStats {
        &self.stats
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// Number of queued messages not yet delivered.
    pub fn in_flight(&self) -> usize {
        self.queue.values().map(Vec::len).sum()
    }

    pub fn in_flight_where(&self, pred: impl Fn(&T) -> bool) -> usize {
        self.queue
            .values()
            .flat_map(|v| v.iter())
            .filter(|e| pred(&e.payload))
            .count()
    }

    /// Sends every envelope and returns per-robot inboxes for this round.
    ///
    /// A message sent in round `r` arrives in round `r + delay_rounds`
    /// unless dropped. Inboxes keep sender order, then send order.
    pub fn deliver_round(&mut self, outboxes: Vec<Envelope<T>>) -> Result<Vec<Vec<T>>, NetError> {
        for env in &outboxes {
            if !self.topology.are_neighbors(env.from, env.to) {
                return Err(NetError::NotNeighbor {
                    from: env.from,
                    to: env.to,
                });
            }
        }
        let due = self.round + self.config.delay_rounds;
        let mut accepted = 0u64;
        for env in outboxes {
            accepted += 1;
            if self.config.drop_prob > 0.0 && self.rng.random::<f64>() < self.config.drop_prob {
                self.stats.dropped += 1;
                continue;
            }
            self.queue.entry(due).or_default().push(env);
        }
        self.stats.sent += accepted;
        self.stats.per_round.push(accepted);

        let mut inboxes: Vec<Vec<T>> = (0..self.topology.len()).map(|_| Vec::new()).collect();
        if let Some(ready) = self.queue.remove(&self.round) {
            for env in ready {
                self.stats.delivered += 1;
                inboxes[env.to.0].push(env.payload);
            }
        }
        self.round += 1;
        Ok(inboxes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(from: usize, to: usize, payload: u32) -> Envelope<u32> {
        Envelope {
            from: RobotId(from),
            to: RobotId(to),
            payload,
        }
    }

    #[test]
    fn complete_graph_immediate_delivery() {
        let mut net = NetworkSim::new(Topology::complete(3), NetConfig::default()).unwrap();
        let inbox = net.deliver_round(vec![env(0, 1, 7), env(0, 2, 7)]).unwrap();
        assert_eq!(inbox, vec![vec![], vec![7], vec![7]]);
        assert_eq!(net.stats().sent, 2);
        assert_eq!(net.stats().delivered, 2);
    }

    #[test]
    fn delayed_delivery() {
        let cfg = NetConfig {
            delay_rounds: 2,
            ..NetConfig::default()
        };
        let mut net = NetworkSim::new(Topology::complete(2), cfg).unwrap();
        assert!(net.deliver_round(vec![env(0, 1, 1)]).unwrap()[1].is_empty());
        assert_eq!(net.in_flight(), 1);
        assert!(net.deliver_round(vec![]).unwrap()[1].is_empty());
        assert_eq!(net.deliver_round(vec![]).unwrap()[1], vec![1]);
        assert_eq!(net.in_flight(), 0);
    }

    #[test]
    fn drops_are_reproducible() {
        let cfg = NetConfig {
            drop_prob: 0.5,
            rng_seed: 99,
            ..NetConfig::default()
        };
        let run = || {
            let mut net = NetworkSim::new(Topology::complete(2), cfg).unwrap();
            let mut got = Vec::new();
            for r in 0..50 {
                got.push(net.deliver_round(vec![env(0, 1, r)]).unwrap()[1].clone());
            }
            (got, net.stats().dropped)
        };
        let (a, dropped) = run();
        assert_eq!(a, run().0);
        assert!(dropped > 0 && dropped < 50);
    }

    #[test]
    fn conservation_without_drops() {
        let mut net = NetworkSim::new(Topology::complete(4), NetConfig::default()).unwrap();
        let mut received = 0;
        for r in 0..10u32 {
            let out: Vec<_> = (0..4)
                .flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| env(i, j, r)))
                .collect();
            received += net.deliver_round(out).unwrap().iter().map(Vec::len).sum::<usize>();
        }
        assert_eq!(received as u64, net.stats().sent);
    }

    #[test]
    fn non_neighbor_is_a_routing_error() {
        let topo = Topology::explicit(3, &[(RobotId(0), RobotId(1))]);
        let mut net = NetworkSim::new(topo, NetConfig::default()).unwrap();
        assert_eq!(
            net.deliver_round(vec![env(0, 2, 1)]).unwrap_err(),
            NetError::NotNeighbor {
                from: RobotId(0),
                to: RobotId(2)
            }
        );
    }

    #[test]
    fn disk_graph_examples() {
        let pts = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(5.0, 0.0),
        ];
        assert_eq!(disk_topology(&pts, 1.5).edges(), vec![(RobotId(0), RobotId(1))]);
        let full = disk_topology(&pts, 10.0);
        assert_eq!(full.edges().len(), 3);
        assert!(full.is_connected());
        assert!(disk_topology(&pts[..1], 1.0).edges().is_empty());
    }

    #[test]
    fn adjacency_is_symmetric() {
        let pts: Vec<Point2<f64>> = (0..12)
            .map(|i| Point2::new((i * 7 % 11) as f64, (i * 5 % 13) as f64))
            .collect();
        let t = disk_topology(&pts, 4.0);
        for i in 0..pts.len() {
            for &j in t.neighbors(RobotId(i)) {
                assert!(t.are_neighbors(j, RobotId(i)));
            }
        }
    }
}
