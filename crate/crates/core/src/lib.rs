//! Discrete-event simulator for sink-rooted low-power lossy networks.
//!
//! The root periodically freezes a [`cost::NetworkSnapshot`] of the topology
//! and per-link metrics, then re-optimises the whole parent assignment. The
//! proposed optimiser is a tabu search over single parent reassignments,
//! scored by a six-term min-max normalised composite cost. Hop-count (OF0),
//! cumulative-ETX and an unnormalised tabu variant are provided as baselines.
//!
//! Module map:
//!
//! - [`topology`]: deployment, radio model, link graph, hop counts.
//! - [`linkstats`]: link-stability EWMA, ETX, byte quantisation, energy floor.
//! - [`cost`]: normalisation and composite edge / path / assignment costs.
//! - [`optimizer`]: tabu search and the exhaustive oracle.
//! - [`calibration`]: Dirichlet + hypervolume weight calibration.
//! - [`engine`]: the event loop, traffic, MAC, energy and control accounting.
//! - [`analysis`]: KPIs, bootstrap CIs, ablation deltas, correlation study.

// `!(x > 0.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;

use serde::{Deserialize, Serialize};

pub mod analysis;
pub mod calibration;
pub mod cost;
pub mod engine;
pub mod linkstats;
pub mod optimizer;
pub mod topology;

/// Identifier of a node in a deployment. Ids are dense, `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn from_index(i: usize) -> Self {
        NodeId(i as u32)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub use cost::{EdgeMetrics, NetworkSnapshot, NormalizationContext, WeightVector};
pub use engine::{Protocol, SimConfig, TraceLog};
pub use optimizer::{ParentAssignment, TabuParams};
pub use topology::{LinkGraph, NodeField, RadioModel};
