//! Composite link cost: weights, min-max normalisation, edge/path/assignment
//! costs over a frozen [`NetworkSnapshot`].

use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linkstats::{safe_residual, LS_FLOOR};
use crate::optimizer::ParentAssignment;
use crate::NodeId;

pub const FEATURES: usize = 6;
pub const FEATURE_NAMES: [&str; FEATURES] = ["e_r", "e_t", "d", "h", "etx", "ls"];
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),
    #[error("normalisation context belongs to snapshot {found}, expected {expected}")]
    StaleContext { expected: u64, found: u64 },
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),
    #[error("invalid metrics on edge {from}->{to}: {msg}")]
    InvalidMetrics { from: NodeId, to: NodeId, msg: String },
    #[error("{} node(s) cannot reach the sink: {orphans:?}", orphans.len())]
    Disconnected { orphans: Vec<NodeId> },
}

/// Six non-negative weights on the simplex, ordered
/// (residual energy, tx energy, distance, hop count, ETX, link stability).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 6]", into = "[f64; 6]")]
pub struct WeightVector([f64; FEATURES]);

impl WeightVector {
    pub const CALIBRATED: [f64; FEATURES] = [0.18, 0.22, 0.12, 0.08, 0.25, 0.15];

    pub fn new(w: [f64; FEATURES]) -> Result<Self, CostError> {
        for (i, x) in w.iter().enumerate() {
            if !x.is_finite() || *x < 0.0 {
                return Err(CostError::InvalidWeights(format!(
                    "weight {} ({}) must be finite and >= 0, got {x}",
                    i + 1,
                    FEATURE_NAMES[i]
                )));
            }
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(CostError::InvalidWeights(format!(
                "weights must sum to 1 within {WEIGHT_SUM_TOLERANCE:e}, got {sum}"
            )));
        }
        Ok(WeightVector(w))
    }

    /// Scales non-negative components to sum to one.
    pub fn normalized(w: [f64; FEATURES]) -> Result<Self, CostError> {
        let sum: f64 = w.iter().sum();
        if !(sum > 0.0) || w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(CostError::InvalidWeights("cannot renormalise: need non-negative weights with positive sum".into()));
        }
        let mut out = w.map(|x| x / sum);
        // Push the rounding residue onto the largest component.
        let resid = 1.0 - out.iter().sum::<f64>();
        let imax = (0..FEATURES).max_by(|a, b| out[*a].total_cmp(&out[*b])).unwrap();
        out[imax] = (out[imax] + resid).max(0.0);
        WeightVector::new(out)
    }

    pub fn as_array(&self) -> [f64; FEATURES] {
        self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    /// Zeroes feature `i` and rescales the remaining weights proportionally.
    pub fn without(&self, i: usize) -> Result<Self, CostError> {
        let mut w = self.0;
        w[i] = 0.0;
        WeightVector::normalized(w)
    }
}

impl Default for WeightVector {
    fn default() -> Self {
        WeightVector(Self::CALIBRATED)
    }
}

impl TryFrom<[f64; FEATURES]> for WeightVector {
    type Error = CostError;
    fn try_from(w: [f64; FEATURES]) -> Result<Self, CostError> {
        WeightVector::new(w)
    }
}

impl From<WeightVector> for [f64; FEATURES] {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeMetrics {
    /// Residual energy of the transmitter, joules.
    pub e_r: f64,
    /// Expected transmit energy per packet, joules.
    pub e_t: f64,
    pub d: f64,
    pub h: f64,
    pub etx: f64,
    pub ls: f64,
}

impl EdgeMetrics {
    /// The six cost features: reciprocal energy, e_t, d, h, etx, reciprocal
    /// stability. Reciprocals are taken after the floors.
    pub fn features(&self) -> [f64; FEATURES] {
        [
            1.0 / safe_residual(self.e_r),
            self.e_t,
            self.d,
            self.h,
            self.etx,
            1.0 / self.ls.max(LS_FLOOR),
        ]
    }

    fn validate(&self) -> Result<(), String> {
        let vals = [self.e_r, self.e_t, self.d, self.h, self.etx, self.ls];
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(format!("all metrics must be finite and >= 0: {self:?}"));
        }
        Ok(())
    }
}

/// `(value - min) / (max - min)`, with a degenerate range mapping to 0.
/// Returns the clamped value and whether clamping was needed.
pub fn normalize_checked(value: f64, min: f64, max: f64) -> (f64, bool) {
    if max <= min {
        return (0.0, value != min);
    }
    let x = (value - min) / (max - min);
    if x < 0.0 {
        (0.0, true)
    } else if x > 1.0 {
        (1.0, true)
    } else {
        (x, false)
    }
}

pub fn normalize(value: f64, min: f64, max: f64) -> f64 {
    normalize_checked(value, min, max).0
}

#[derive(Debug)]
pub struct NormalizationContext {
    pub snapshot_id: u64,
    pub min: [f64; FEATURES],
    pub max: [f64; FEATURES],
    clamped: AtomicU64,
}

impl Clone for NormalizationContext {
    fn clone(&self) -> Self {
        NormalizationContext {
            snapshot_id: self.snapshot_id,
            min: self.min,
            max: self.max,
            clamped: AtomicU64::new(self.clamped_count()),
        }
    }
}

impl PartialEq for NormalizationContext {
    fn eq(&self, other: &Self) -> bool {
        self.snapshot_id == other.snapshot_id && self.min == other.min && self.max == other.max
    }
}

impl NormalizationContext {
    pub fn new(snapshot_id: u64, min: [f64; FEATURES], max: [f64; FEATURES]) -> Self {
        NormalizationContext { snapshot_id, min, max, clamped: AtomicU64::new(0) }
    }

    /// Per-feature extrema over `metrics`. An empty input gives all-zero ranges.
    pub fn from_metrics<'a>(snapshot_id: u64, metrics: impl IntoIterator<Item = &'a EdgeMetrics>) -> Self {
        let mut min = [f64::INFINITY; FEATURES];
        let mut max = [f64::NEG_INFINITY; FEATURES];
        let mut any = false;
        for m in metrics {
            any = true;
            for (i, f) in m.features().into_iter().enumerate() {
                min[i] = min[i].min(f);
                max[i] = max[i].max(f);
            }
        }
        if !any {
            min = [0.0; FEATURES];
            max = [0.0; FEATURES];
        }
        NormalizationContext::new(snapshot_id, min, max)
    }

    pub fn normalized_features(&self, m: &EdgeMetrics) -> [f64; FEATURES] {
        let f = m.features();
        let mut out = [0.0; FEATURES];
        for i in 0..FEATURES {
            let (x, clamped) = normalize_checked(f[i], self.min[i], self.max[i]);
            if clamped {
                self.clamped.fetch_add(1, Ordering::Relaxed);
            }
            out[i] = x;
        }
        out
    }

    /// Number of out-of-range values clamped so far.
    pub fn clamped_count(&self) -> u64 {
        self.clamped.load(Ordering::Relaxed)
    }
}

pub fn edge_cost_raw(m: &EdgeMetrics, w: &WeightVector) -> f64 {
    m.features().iter().zip(w.0.iter()).map(|(f, l)| f * l).sum()
}

pub fn edge_cost_norm(m: &EdgeMetrics, ctx: &NormalizationContext, w: &WeightVector) -> f64 {
    ctx.normalized_features(m).iter().zip(w.0.iter()).map(|(f, l)| f * l).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostKind {
    Normalized,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub weights: WeightVector,
    pub kind: CostKind,
}

impl CostModel {
    pub fn normalized(weights: WeightVector) -> Self {
        CostModel { weights, kind: CostKind::Normalized }
    }

    pub fn raw(weights: WeightVector) -> Self {
        CostModel { weights, kind: CostKind::Raw }
    }
}

/// How the per-edge hop feature is derived when a snapshot is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HopFeature {
    /// Every edge contributes one hop.
    Increment,
    /// The depth the transmitter would have through this parent: `h(parent) + 1`.
    ViaParentDepth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub metrics: EdgeMetrics,
}

/// Frozen view of the usable topology and per-link metrics at one instant.
///
/// Only edges between nodes that can reach the sink are kept, and edges
/// leaving the sink are dropped; `candidates(v)` lists the usable parents of
/// `v` in ascending id order.
#[derive(Debug, Clone)]
pub struct NetworkSnapshot {
    id: u64,
    time: f64,
    sink: NodeId,
    edges: Vec<SnapEdge>,
    candidates: Vec<Vec<(NodeId, usize)>>,
    hops: Vec<Option<u32>>,
    residual: Vec<f64>,
    ctx: NormalizationContext,
}

impl NetworkSnapshot {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn sink(&self) -> NodeId {
        self.sink
    }

    pub fn node_count(&self) -> usize {
        self.hops.len()
    }

    pub fn edges(&self) -> &[SnapEdge] {
        &self.edges
    }

    pub fn context(&self) -> &NormalizationContext {
        &self.ctx
    }

    pub fn hop(&self, v: NodeId) -> Option<u32> {
        self.hops[v.index()]
    }

    pub fn hops(&self) -> &[Option<u32>] {
        &self.hops
    }

    pub fn residual(&self, v: NodeId) -> f64 {
        self.residual[v.index()]
    }

    /// Nodes other than the sink that can reach it: the ones needing a parent.
    pub fn is_member(&self, v: NodeId) -> bool {
        v != self.sink && self.hops[v.index()].is_some()
    }

    pub fn members(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count()).map(NodeId::from_index).filter(|v| self.is_member(*v))
    }

    /// `(parent, edge index)` pairs, ascending by parent id.
    pub fn candidates(&self, v: NodeId) -> &[(NodeId, usize)] {
        &self.candidates[v.index()]
    }

    pub fn edge_index(&self, from: NodeId, to: NodeId) -> Option<usize> {
        let c = &self.candidates[from.index()];
        c.binary_search_by_key(&to, |(p, _)| *p).ok().map(|i| c[i].1)
    }

    /// Replaces the normalisation context, e.g. with one from another
    /// snapshot. Cost evaluation then fails with a stale-context error.
    pub fn with_context(mut self, ctx: NormalizationContext) -> Self {
        self.ctx = ctx;
        self
    }

    pub fn edge_costs(&self, model: &CostModel) -> Result<Vec<f64>, CostError> {
        match model.kind {
            CostKind::Raw => Ok(self.edges.iter().map(|e| edge_cost_raw(&e.metrics, &model.weights)).collect()),
            CostKind::Normalized => {
                if self.ctx.snapshot_id != self.id {
                    return Err(CostError::StaleContext { expected: self.id, found: self.ctx.snapshot_id });
                }
                Ok(self.edges.iter().map(|e| edge_cost_norm(&e.metrics, &self.ctx, &model.weights)).collect())
            }
        }
    }

    /// Cost of the node sequence `path` (`path[0]` the source, last element the
    /// sink). An empty path or `[sink]` costs 0.
    pub fn path_cost(&self, path: &[NodeId], costs: &[f64]) -> Result<f64, CostError> {
        if path.is_empty() {
            return Ok(0.0);
        }
        if *path.last().unwrap() != self.sink {
            return Err(CostError::InvalidPath(format!("path ends at {}, not the sink", path.last().unwrap())));
        }
        let mut total = 0.0;
        for w in path.windows(2) {
            let e = self
                .edge_index(w[0], w[1])
                .ok_or_else(|| CostError::InvalidPath(format!("no usable edge {}->{}", w[0], w[1])))?;
            total += costs[e];
        }
        Ok(total)
    }

    /// Checks that every member has a candidate parent and the induced graph
    /// is a sink-rooted tree.
    pub fn validate_assignment(&self, a: &ParentAssignment) -> Result<(), CostError> {
        if a.len() != self.node_count() {
            return Err(CostError::InvalidAssignment(format!(
                "assignment covers {} nodes, snapshot has {}",
                a.len(),
                self.node_count()
            )));
        }
        for v in (0..self.node_count()).map(NodeId::from_index) {
            match (self.is_member(v), a.parent(v)) {
                (true, Some(p)) => {
                    if self.edge_index(v, p).is_none() {
                        return Err(CostError::InvalidAssignment(format!("{p} is not a usable parent of {v}")));
                    }
                }
                (true, None) => return Err(CostError::InvalidAssignment(format!("node {v} has no parent"))),
                (false, Some(_)) => {
                    return Err(CostError::InvalidAssignment(format!("node {v} is not routable but has a parent")))
                }
                (false, None) => {}
            }
        }
        if !a.is_acyclic(self.sink) {
            return Err(CostError::InvalidAssignment("parent pointers contain a cycle".into()));
        }
        Ok(())
    }

    /// Sum over members of the cost of their induced path to the sink.
    pub fn assignment_cost(&self, a: &ParentAssignment, costs: &[f64]) -> Result<f64, CostError> {
        self.validate_assignment(a)?;
        let pc = self.path_costs(a, costs);
        Ok(self.members().map(|v| pc[v.index()]).sum())
    }

    /// Same total computed edge-wise: each edge weighted by the number of
    /// members routing through it (its subtree size).
    pub fn assignment_cost_by_subtree(&self, a: &ParentAssignment, costs: &[f64]) -> Result<f64, CostError> {
        self.validate_assignment(a)?;
        let size = subtree_sizes(a, self.sink);
        Ok(self
            .members()
            .map(|v| {
                let e = self.edge_index(v, a.parent(v).unwrap()).unwrap();
                size[v.index()] as f64 * costs[e]
            })
            .sum())
    }

    /// Path cost of every node under a valid assignment; non-members get 0.
    pub fn path_costs(&self, a: &ParentAssignment, costs: &[f64]) -> Vec<f64> {
        let mut pc = vec![0.0; self.node_count()];
        for v in top_down_order(a, self.sink) {
            if let Some(p) = a.parent(v) {
                let e = self.edge_index(v, p).expect("validated assignment");
                pc[v.index()] = costs[e] + pc[p.index()];
            }
        }
        pc
    }
}

/// Nodes of the tree in breadth-first order from the sink.
pub fn top_down_order(a: &ParentAssignment, sink: NodeId) -> Vec<NodeId> {
    let n = a.len();
    let mut children = vec![Vec::new(); n];
    for v in 0..n {
        if let Some(p) = a.parent(NodeId::from_index(v)) {
            children[p.index()].push(NodeId::from_index(v));
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut q = VecDeque::from([sink]);
    while let Some(v) = q.pop_front() {
        order.push(v);
        q.extend(children[v.index()].iter().copied());
    }
    order
}

/// Number of nodes in each node's subtree, itself included.
pub fn subtree_sizes(a: &ParentAssignment, sink: NodeId) -> Vec<usize> {
    let order = top_down_order(a, sink);
    let mut size = vec![0usize; a.len()];
    for v in order.iter().rev() {
        size[v.index()] += 1;
        if let Some(p) = a.parent(*v) {
            size[p.index()] += size[v.index()];
        }
    }
    size
}

/// Incremental construction of a [`NetworkSnapshot`].
#[derive(Debug, Clone)]
pub struct SnapshotBuilder {
    n: usize,
    sink: NodeId,
    edges: Vec<SnapEdge>,
    residual: Vec<f64>,
    alive: Vec<bool>,
    hop_feature: Option<HopFeature>,
}

impl SnapshotBuilder {
    pub fn new(n: usize, sink: NodeId) -> Self {
        SnapshotBuilder {
            n,
            sink,
            edges: Vec::new(),
            residual: vec![0.0; n],
            alive: vec![true; n],
            hop_feature: None,
        }
    }

    pub fn edge(mut self, from: NodeId, to: NodeId, metrics: EdgeMetrics) -> Self {
        self.add_edge(from, to, metrics);
        self
    }

    pub fn add_edge(&mut self, from: NodeId, to: NodeId, metrics: EdgeMetrics) {
        self.edges.push(SnapEdge { from, to, metrics });
    }

    pub fn residual(mut self, v: NodeId, joules: f64) -> Self {
        self.residual[v.index()] = joules;
        self
    }

    pub fn set_residual(&mut self, v: NodeId, joules: f64) {
        self.residual[v.index()] = joules;
    }

    /// Nodes marked dead take no part in the snapshot.
    pub fn set_alive(&mut self, v: NodeId, alive: bool) {
        self.alive[v.index()] = alive;
    }

    /// When set, overwrites every edge's `h` after hop counts are known.
    pub fn hop_feature(mut self, kind: HopFeature) -> Self {
        self.hop_feature = Some(kind);
        self
    }

    pub fn build(self, id: u64, time: f64) -> Result<NetworkSnapshot, CostError> {
        let n = self.n;
        if self.sink.index() >= n {
            return Err(CostError::InvalidAssignment(format!("sink {} out of range", self.sink)));
        }
        let mut edges = self.edges;
        for e in &edges {
            if e.from.index() >= n || e.to.index() >= n || e.from == e.to {
                return Err(CostError::InvalidMetrics { from: e.from, to: e.to, msg: "bad endpoints".into() });
            }
            e.metrics.validate().map_err(|msg| CostError::InvalidMetrics { from: e.from, to: e.to, msg })?;
        }
        let alive = &self.alive;
        edges.retain(|e| alive[e.from.index()] && alive[e.to.index()] && e.from != self.sink);
        edges.sort_by_key(|e| (e.from, e.to));
        if edges.windows(2).any(|w| (w[0].from, w[0].to) == (w[1].from, w[1].to)) {
            return Err(CostError::InvalidAssignment("duplicate edge".into()));
        }

        // Hop counts by BFS towards the sink over the kept edges.
        let mut incoming = vec![Vec::new(); n];
        for e in &edges {
            incoming[e.to.index()].push(e.from);
        }
        let mut hops = vec![None; n];
        if alive[self.sink.index()] {
            hops[self.sink.index()] = Some(0u32);
            let mut q = VecDeque::from([self.sink]);
            while let Some(v) = q.pop_front() {
                let hv = hops[v.index()].unwrap();
                for u in &incoming[v.index()] {
                    if hops[u.index()].is_none() {
                        hops[u.index()] = Some(hv + 1);
                        q.push_back(*u);
                    }
                }
            }
        }
        edges.retain(|e| hops[e.from.index()].is_some() && hops[e.to.index()].is_some());
        if let Some(kind) = self.hop_feature {
            for e in &mut edges {
                e.metrics.h = match kind {
                    HopFeature::Increment => 1.0,
                    HopFeature::ViaParentDepth => (hops[e.to.index()].unwrap() + 1) as f64,
                };
            }
        }
        let mut candidates = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            candidates[e.from.index()].push((e.to, i));
        }
        let ctx = NormalizationContext::from_metrics(id, edges.iter().map(|e| &e.metrics));
        Ok(NetworkSnapshot { id, time, sink: self.sink, edges, candidates, hops, residual: self.residual, ctx })
    }

    /// Like [`build`](Self::build) but fails if an alive node cannot reach the sink.
    pub fn build_connected(self, id: u64, time: f64) -> Result<NetworkSnapshot, CostError> {
        let alive = self.alive.clone();
        let snap = self.build(id, time)?;
        let orphans: Vec<NodeId> = (0..snap.node_count())
            .map(NodeId::from_index)
            .filter(|v| alive[v.index()] && snap.hop(*v).is_none())
            .collect();
        if !orphans.is_empty() {
            return Err(CostError::Disconnected { orphans });
        }
        Ok(snap)
    }
}
