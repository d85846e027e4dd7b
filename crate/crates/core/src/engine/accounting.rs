//! Snapshot byte and energy accounting.

use crate::engine::config::{ControlSizes, RadioEnergyParams};
use crate::topology::LinkGraph;
use crate::NodeId;

/// Byte sizes, radio neighbour lists and per-bit energies needed to price a
/// snapshot round.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotAccounting {
    pub sizes: ControlSizes,
    pub period_s: f64,
    pub e_tx_per_bit: f64,
    pub e_rx_per_bit: f64,
    pub sink: NodeId,
    pub neighbours: Vec<Vec<NodeId>>,
}

impl SnapshotAccounting {
    pub fn new(sizes: ControlSizes, period_s: f64, energy: &RadioEnergyParams, sink: NodeId, neighbours: Vec<Vec<NodeId>>) -> Self {
        SnapshotAccounting {
            sizes,
            period_s,
            e_tx_per_bit: energy.e_tx_per_bit(),
            e_rx_per_bit: energy.e_rx_per_bit(),
            sink,
            neighbours,
        }
    }

    pub fn from_graph(graph: &LinkGraph, sizes: ControlSizes, period_s: f64, energy: &RadioEnergyParams) -> Self {
        let neighbours = (0..graph.node_count())
            .map(|v| graph.neighbors(NodeId::from_index(v)).collect())
            .collect();
        SnapshotAccounting::new(sizes, period_s, energy, graph.sink(), neighbours)
    }

    pub fn node_count(&self) -> usize {
        self.neighbours.len()
    }

    /// `18 + 6 * min(k, 6)` bytes.
    pub fn message_bytes(&self, k: usize) -> u64 {
        self.sizes.snapshot_header as u64 + self.sizes.per_neighbour as u64 * k.min(self.sizes.max_neighbours as usize) as u64
    }

    /// Alive neighbours of `v`.
    pub fn alive_degree(&self, v: NodeId, alive: &[bool]) -> usize {
        self.neighbours[v.index()].iter().filter(|w| alive[w.index()]).count()
    }

    /// Snapshot size of each alive node; 0 for dead ones.
    pub fn round_message_bytes(&self, alive: &[bool]) -> Vec<u64> {
        (0..self.node_count())
            .map(|v| {
                let v = NodeId::from_index(v);
                if alive[v.index()] {
                    self.message_bytes(self.alive_degree(v, alive))
                } else {
                    0
                }
            })
            .collect()
    }

    pub fn round_bytes(&self, alive: &[bool]) -> u64 {
        self.round_message_bytes(alive).iter().sum()
    }

    /// Per-node snapshot control energy for one round: own message sent plus
    /// every alive neighbour's message heard.
    pub fn round_energy(&self, alive: &[bool]) -> Vec<f64> {
        let bytes = self.round_message_bytes(alive);
        (0..self.node_count())
            .map(|v| {
                if !alive[v] {
                    return 0.0;
                }
                let own = bytes[v] as f64 * 8.0 * self.e_tx_per_bit;
                let heard: f64 = self.neighbours[v]
                    .iter()
                    .filter(|w| alive[w.index()])
                    .map(|w| bytes[w.index()] as f64 * 8.0 * self.e_rx_per_bit)
                    .sum();
                own + heard
            })
            .collect()
    }
}

/// Network-wide bytes per round, `N (18 + 6 k)`, for a mean neighbour count `k`.
pub fn snapshot_round_bytes(n: usize, mean_k: f64, sizes: &ControlSizes) -> f64 {
    n as f64 * (sizes.snapshot_header as f64 + sizes.per_neighbour as f64 * mean_k)
}

/// Control rate in bits per second.
pub fn control_rate_bps(round_bytes: f64, period_s: f64) -> f64 {
    round_bytes * 8.0 / period_s
}
