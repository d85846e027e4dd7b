//! The discrete-event loop.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cost::{CostError, CostModel, EdgeMetrics, NetworkSnapshot, SnapshotBuilder};
use crate::engine::accounting::SnapshotAccounting;
use crate::engine::config::{CtrlEnergyMode, Protocol, SimConfig, TraceLevel};
use crate::engine::trace::{
    Counters, CtrlMsg, DropReason, EnergySample, Event, EventKind, LinkCounter, SnapshotRound, TabuSummary,
    TraceHeader, TraceLog,
};
use crate::linkstats::{EnergyState, LinkStats};
use crate::optimizer::{
    initial_solution, min_hop_assignment, shortest_path_tree, tabu_search_from, OptError, ParentAssignment,
    TabuParams,
};
use crate::topology::{
    build_links, deploy_connected, deploy_uniform_with_sink, hop_counts, EdgeId, LinkGraph, NodeField, TopologyError,
};
use crate::NodeId;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Optimizer(#[from] OptError),
}

impl SimError {
    pub fn is_connectivity(&self) -> bool {
        matches!(
            self,
            SimError::Topology(TopologyError::Disconnected { .. }) | SimError::Cost(CostError::Disconnected { .. })
        )
    }
}

/// Bernoulli attempts at success probability `p` until one succeeds or
/// `retry_limit` attempts are used. Returns (attempts, delivered).
pub fn transmit(p: f64, retry_limit: u32, rng: &mut impl Rng) -> (u32, bool) {
    for a in 1..=retry_limit {
        if rng.random::<f64>() < p {
            return (a, true);
        }
    }
    (retry_limit, false)
}

/// Queueing plus service time at one hop, less the propagation delay, floored at 0.
pub fn per_hop_delay(tx_start: f64, tx_end: f64, t_air: f64) -> f64 {
    ((tx_end - tx_start) - t_air).max(0.0)
}

/// Deployment and link graph for a run, redrawing if configured to.
pub fn setup_topology(config: &SimConfig, seed: u64) -> Result<(NodeField, LinkGraph), SimError> {
    config.validate().map_err(SimError::Config)?;
    if config.redraw_until_connected {
        let (f, g, _) =
            deploy_connected(config.nodes, config.area, config.sink_position, &config.radio, seed, config.max_redraws)?;
        Ok((f, g))
    } else {
        let f = deploy_uniform_with_sink(config.nodes, config.area, seed, config.sink_position)?;
        let g = build_links(&f, &config.radio, seed)?;
        Ok((f, g))
    }
}

/// Simulates one scenario from scratch.
pub fn run(config: &SimConfig, seed: u64) -> Result<TraceLog, SimError> {
    let (field, graph) = setup_topology(config, seed)?;
    run_on(config, &field, &graph, seed)
}

/// Simulates on a given deployment and link graph.
pub fn run_on(config: &SimConfig, field: &NodeField, graph: &LinkGraph, seed: u64) -> Result<TraceLog, SimError> {
    config.validate().map_err(SimError::Config)?;
    if field.len() != graph.node_count() || field.sink != graph.sink() {
        return Err(SimError::Config("field and link graph disagree".into()));
    }
    hop_counts(graph, graph.sink())?;
    let mut sim = Sim::new(config, field, graph, seed);
    sim.run()?;
    Ok(sim.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ev {
    Snapshot(u64),
    Generate(NodeId, u64),
    TxEnd(NodeId),
}

struct Scheduled {
    t: f64,
    seq: u64,
    ev: Ev,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // Reversed: BinaryHeap is a max-heap.
    fn cmp(&self, other: &Self) -> Ordering {
        other.t.total_cmp(&self.t).then_with(|| other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Copy)]
struct Packet {
    id: u64,
    created: f64,
    hops: u32,
    enqueued: f64,
}

#[derive(Debug, Clone, Copy)]
struct InFlight {
    parent: NodeId,
    edge: EdgeId,
    attempts: u32,
    ok: bool,
}

struct NodeState {
    alive: bool,
    energy: EnergyState,
    queue: VecDeque<Packet>,
    inflight: Option<InFlight>,
    last_repair: f64,
}

struct Sim<'a> {
    cfg: &'a SimConfig,
    field: &'a NodeField,
    graph: &'a LinkGraph,
    seed: u64,
    sink: NodeId,
    rng: ChaCha8Rng,
    now: f64,
    end: f64,
    heap: BinaryHeap<Scheduled>,
    seq: u64,
    nodes: Vec<NodeState>,
    links: Vec<LinkStats>,
    parents: ParentAssignment,
    acct: SnapshotAccounting,
    next_pkt: u64,
    offsets: Vec<f64>,
    e_tx: f64,
    e_rx: f64,
    frame_bits: u64,
    death_threshold: f64,
    trace: TraceLog,
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a SimConfig, field: &'a NodeField, graph: &'a LinkGraph, seed: u64) -> Self {
        let n = graph.node_count();
        let nodes = (0..n)
            .map(|_| NodeState {
                alive: true,
                energy: EnergyState::new(cfg.initial_energy_j),
                queue: VecDeque::with_capacity(cfg.queue_capacity),
                inflight: None,
                last_repair: f64::NEG_INFINITY,
            })
            .collect();
        let header = TraceHeader {
            seed,
            protocol: cfg.protocol,
            nodes: n,
            sink: graph.sink(),
            duration_s: cfg.duration_s,
            period_s: cfg.snapshot_period_s,
            rate_pps: cfg.rate_pps,
            payload_bytes: cfg.payload_bytes,
            ctrl_energy: cfg.ctrl_energy,
        };
        let trace = TraceLog {
            header,
            events: Vec::new(),
            counters: Counters::default(),
            energy_samples: Vec::new(),
            links: Vec::new(),
            initial_energy: cfg.initial_energy_j,
            final_residual: Vec::new(),
            rounds: Vec::new(),
            deaths: Vec::new(),
            dh_samples: Vec::new(),
            end_time: 0.0,
        };
        Sim {
            cfg,
            field,
            graph,
            seed,
            sink: graph.sink(),
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x7a11_c0de_0000_0001),
            now: 0.0,
            end: cfg.duration_s + cfg.drain_s,
            heap: BinaryHeap::new(),
            seq: 0,
            nodes,
            links: vec![LinkStats::default(); graph.links().len()],
            parents: ParentAssignment::empty(n),
            acct: SnapshotAccounting::from_graph(graph, cfg.control, cfg.snapshot_period_s, &cfg.energy),
            next_pkt: 0,
            offsets: vec![0.0; n],
            e_tx: cfg.energy.e_tx_per_bit(),
            e_rx: cfg.energy.e_rx_per_bit(),
            frame_bits: cfg.frame_bits(),
            death_threshold: cfg.frame_tx_energy(),
            trace,
        }
    }

    fn schedule(&mut self, t: f64, ev: Ev) {
        self.seq += 1;
        self.heap.push(Scheduled { t, seq: self.seq, ev });
    }

    fn log(&mut self, node: NodeId, kind: EventKind) {
        let keep = match self.cfg.trace {
            TraceLevel::Off => false,
            TraceLevel::Full => true,
            TraceLevel::Control => matches!(kind, EventKind::Ctrl { .. } | EventKind::Energy { .. } | EventKind::Dead),
        };
        if keep {
            self.trace.events.push(Event { t: self.now, node, kind });
        }
    }

    fn run(&mut self) -> Result<(), SimError> {
        // Initial DODAG formation from prior link estimates; no control cost.
        let assignment = self.reoptimize(0)?;
        self.parents = assignment;

        let mut k = 1u64;
        while (k as f64) * self.cfg.snapshot_period_s < self.cfg.duration_s {
            self.schedule(k as f64 * self.cfg.snapshot_period_s, Ev::Snapshot(k));
            k += 1;
        }
        if self.cfg.rate_pps > 0.0 {
            let interval = 1.0 / self.cfg.rate_pps;
            let mut traffic = ChaCha8Rng::seed_from_u64(self.seed ^ 0x7a11_c0de_0000_0002);
            for v in 0..self.nodes.len() {
                let v = NodeId::from_index(v);
                let offset = traffic.random::<f64>() * interval;
                self.offsets[v.index()] = offset;
                if v != self.sink && offset < self.cfg.duration_s {
                    self.schedule(offset, Ev::Generate(v, 0));
                }
            }
        }

        while let Some(s) = self.heap.pop() {
            if s.t > self.end {
                break;
            }
            self.now = s.t;
            match s.ev {
                Ev::Snapshot(k) => self.on_snapshot(k)?,
                Ev::Generate(v, i) => self.on_generate(v, i),
                Ev::TxEnd(v) => self.on_tx_end(v),
            }
        }
        self.now = self.end;
        Ok(())
    }

    fn finish(mut self) -> TraceLog {
        let in_flight: u64 = self.nodes.iter().map(|n| n.queue.len() as u64).sum();
        self.trace.counters.in_flight_end = in_flight;
        self.sample_energy();
        self.trace.final_residual = self.nodes.iter().map(|n| n.energy.residual()).collect();
        self.trace.links = self
            .graph
            .links()
            .iter()
            .zip(&self.links)
            .map(|(l, s)| LinkCounter { from: l.from, to: l.to, attempts: s.tx_count, acks: s.ack_count })
            .collect();
        self.trace.end_time = self.end;
        self.trace
    }

    fn debit(&mut self, v: NodeId, joules: f64) {
        if v != self.sink {
            self.nodes[v.index()].energy.debit(joules);
        }
    }

    fn check_death(&mut self, v: NodeId) {
        let st = &self.nodes[v.index()];
        if v == self.sink || !st.alive || st.energy.residual() >= self.death_threshold {
            return;
        }
        self.nodes[v.index()].alive = false;
        self.nodes[v.index()].inflight = None;
        self.log(v, EventKind::Dead);
        self.trace.deaths.push((self.now, v));
        let queued: Vec<Packet> = self.nodes[v.index()].queue.drain(..).collect();
        for p in queued {
            self.drop_packet(v, p, DropReason::Dead);
        }
    }

    fn drop_packet(&mut self, v: NodeId, p: Packet, why: DropReason) {
        let c = &mut self.trace.counters;
        match why {
            DropReason::Queue => c.drop_queue += 1,
            DropReason::Retry => c.drop_retry += 1,
            DropReason::NoRoute => c.drop_noroute += 1,
            DropReason::Dead => c.drop_dead += 1,
        }
        self.log(v, EventKind::Drop { pkt: p.id, why });
    }

    fn control(&mut self, v: NodeId, msg: CtrlMsg, bytes: u64, to: Option<NodeId>) {
        let c = &mut self.trace.counters;
        c.ctrl_messages += 1;
        c.ctrl_bytes += bytes;
        match msg {
            CtrlMsg::Snapshot => c.snapshot_bytes += bytes,
            CtrlMsg::Dis | CtrlMsg::Dio => c.repair_bytes += bytes,
            CtrlMsg::Dao => c.dao_bytes += bytes,
        }
        self.log(v, EventKind::Ctrl { msg, bytes, to });
    }

    fn enqueue(&mut self, v: NodeId, mut p: Packet) {
        if self.nodes[v.index()].queue.len() >= self.cfg.queue_capacity {
            self.drop_packet(v, p, DropReason::Queue);
            return;
        }
        p.enqueued = self.now;
        self.nodes[v.index()].queue.push_back(p);
        self.try_start(v);
    }

    fn slot_time(&self, distance: f64) -> f64 {
        self.cfg.energy.airtime(self.frame_bits)
            + self.cfg.turnaround_s
            + self.cfg.energy.airtime(self.cfg.ack_bits())
            + 2.0 * distance / self.cfg.propagation_mps
    }

    fn try_start(&mut self, v: NodeId) {
        loop {
            let st = &self.nodes[v.index()];
            if !st.alive || st.inflight.is_some() || st.queue.is_empty() {
                return;
            }
            let Some(parent) = self.parents.parent(v) else {
                let p = self.nodes[v.index()].queue.pop_front().unwrap();
                self.drop_packet(v, p, DropReason::NoRoute);
                continue;
            };
            let edge = self.graph.edge_between(v, parent).expect("parents are radio neighbours");
            let link = self.graph.link(edge);
            let p = if self.nodes[parent.index()].alive { link.delivery } else { 0.0 };
            let (attempts, ok) = transmit(p, self.cfg.retry_limit, &mut self.rng);
            let dur = attempts as f64 * self.slot_time(link.distance);
            self.nodes[v.index()].inflight = Some(InFlight { parent, edge, attempts, ok });
            let t = self.now + dur;
            self.schedule(t, Ev::TxEnd(v));
            return;
        }
    }

    fn on_generate(&mut self, v: NodeId, i: u64) {
        if !self.nodes[v.index()].alive {
            return;
        }
        let next = self.offsets[v.index()] + ((i + 1) as f64) / self.cfg.rate_pps;
        let p = Packet { id: self.next_pkt, created: self.now, hops: 0, enqueued: self.now };
        self.next_pkt += 1;
        self.trace.counters.sent += 1;
        self.log(v, EventKind::Send { pkt: p.id });
        self.enqueue(v, p);
        if next < self.cfg.duration_s {
            self.schedule(next, Ev::Generate(v, i + 1));
        }
    }

    fn on_tx_end(&mut self, v: NodeId) {
        if !self.nodes[v.index()].alive {
            return;
        }
        let Some(f) = self.nodes[v.index()].inflight.take() else { return };
        self.debit(v, f.attempts as f64 * self.frame_bits as f64 * self.e_tx);
        let stats = &mut self.links[f.edge.0];
        for a in 1..=f.attempts {
            stats.record_attempt(f.ok && a == f.attempts);
        }
        if f.ok {
            stats.record_delivery(f.attempts);
        }
        self.trace.counters.tx_attempts += f.attempts as u64;
        self.trace.counters.tx_acks += f.ok as u64;
        let mut pkt = self.nodes[v.index()].queue.pop_front().expect("in-flight packet at queue head");
        let q = self.nodes[v.index()].queue.len();
        self.log(v, EventKind::Tx { pkt: pkt.id, att: f.attempts, ok: f.ok, q });

        if f.ok && self.nodes[f.parent.index()].alive {
            self.debit(f.parent, self.frame_bits as f64 * self.e_rx);
            let distance = self.graph.link(f.edge).distance;
            let d = per_hop_delay(pkt.enqueued, self.now, distance / self.cfg.propagation_mps);
            let c = &mut self.trace.counters;
            c.per_hop_delay_sum_s += d;
            c.per_hop_samples += 1;
            pkt.hops += 1;
            if f.parent == self.sink {
                c.received += 1;
                c.hop_sum += pkt.hops as u64;
                c.delay_sum_s += self.now - pkt.created;
                c.delivered_payload_bits += self.cfg.payload_bytes as u64 * 8;
                self.log(self.sink, EventKind::Recv { pkt: pkt.id, hop: pkt.hops });
            } else {
                self.enqueue(f.parent, pkt);
            }
            self.check_death(f.parent);
        } else if f.ok {
            self.drop_packet(v, pkt, DropReason::Dead);
        } else {
            self.drop_packet(v, pkt, DropReason::Retry);
            self.local_repair(v);
        }
        self.check_death(v);
        self.try_start(v);
    }

    /// DIS from `v`, answered by a DIO from every alive neighbour. The
    /// parent itself only changes at the next snapshot.
    fn local_repair(&mut self, v: NodeId) {
        if !self.nodes[v.index()].alive || self.now - self.nodes[v.index()].last_repair < self.cfg.repair_holddown_s {
            return;
        }
        self.nodes[v.index()].last_repair = self.now;
        let dis = self.cfg.control.dis as u64;
        let dio = self.cfg.control.dio as u64;
        let neighbours: Vec<NodeId> =
            self.graph.neighbors(v).filter(|w| self.nodes[w.index()].alive).collect();
        self.control(v, CtrlMsg::Dis, dis, None);
        self.debit(v, dis as f64 * 8.0 * self.e_tx);
        for &w in &neighbours {
            self.debit(w, dis as f64 * 8.0 * self.e_rx);
        }
        for &w in &neighbours {
            self.control(w, CtrlMsg::Dio, dio, Some(v));
            self.debit(w, dio as f64 * 8.0 * self.e_tx);
            self.debit(v, dio as f64 * 8.0 * self.e_rx);
        }
        for &w in &neighbours {
            self.check_death(w);
        }
        self.check_death(v);
    }

    fn alive_mask(&self) -> Vec<bool> {
        self.nodes.iter().map(|n| n.alive).collect()
    }

    fn build_snapshot(&self, k: u64) -> Result<NetworkSnapshot, SimError> {
        let n = self.nodes.len();
        let mut b = SnapshotBuilder::new(n, self.sink).hop_feature(self.cfg.hop_feature);
        for (v, st) in self.nodes.iter().enumerate() {
            b.set_alive(NodeId::from_index(v), st.alive);
            b.set_residual(NodeId::from_index(v), st.energy.residual());
        }
        for (i, l) in self.graph.links().iter().enumerate() {
            let s = &self.links[i];
            b.add_edge(
                l.from,
                l.to,
                EdgeMetrics {
                    e_r: self.nodes[l.from.index()].energy.residual(),
                    e_t: self.frame_bits as f64 * self.e_tx * s.etx,
                    d: l.distance,
                    h: 1.0,
                    etx: s.etx,
                    ls: s.ls_for_cost(),
                },
            );
        }
        Ok(b.build(k, self.now)?)
    }

    fn ts_params(&self, k: u64) -> TabuParams {
        TabuParams { seed: self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ k, ..self.cfg.tabu }
    }

    /// Runs the configured objective on a fresh snapshot.
    fn reoptimize(&mut self, k: u64) -> Result<ParentAssignment, SimError> {
        let snap = self.build_snapshot(k)?;
        let (a, summary) = reoptimize_root(&snap, self.cfg, &self.parents, &self.ts_params(k))?;
        if self.cfg.log_dh_samples && k > 0 {
            for e in snap.edges() {
                let h = snap.hop(e.from).unwrap() as f64;
                self.trace.dh_samples.push((self.field.distance_to_sink(e.from), h));
            }
        }
        if k > 0 {
            let alive = self.alive_mask();
            let alive_count = alive.iter().filter(|a| **a).count();
            let deg: usize = (0..alive.len())
                .filter(|v| alive[*v])
                .map(|v| self.acct.alive_degree(NodeId::from_index(v), &alive))
                .sum();
            self.trace.rounds.push(SnapshotRound {
                index: k,
                t: self.now,
                bytes: self.acct.round_bytes(&alive),
                mean_k: if alive_count > 0 { deg as f64 / alive_count as f64 } else { 0.0 },
                parent_changes: 0,
                tabu: summary,
            });
        }
        Ok(a)
    }

    fn on_snapshot(&mut self, k: u64) -> Result<(), SimError> {
        let alive = self.alive_mask();
        let bytes = self.acct.round_message_bytes(&alive);
        for v in 0..self.nodes.len() {
            if alive[v] {
                self.control(NodeId::from_index(v), CtrlMsg::Snapshot, bytes[v], None);
            }
        }
        if self.cfg.ctrl_energy == CtrlEnergyMode::Inline {
            let energy = self.acct.round_energy(&alive);
            for (v, e) in energy.into_iter().enumerate() {
                self.debit(NodeId::from_index(v), e);
            }
            for v in 0..self.nodes.len() {
                self.check_death(NodeId::from_index(v));
            }
        }

        let new = self.reoptimize(k)?;
        let mut changes = 0;
        let dao = self.cfg.control.dao as u64;
        for v in 0..self.nodes.len() {
            let v = NodeId::from_index(v);
            let (old, next) = (self.parents.parent(v), new.parent(v));
            if let Some(p) = next {
                if old != next {
                    changes += 1;
                    self.control(v, CtrlMsg::Dao, dao, Some(p));
                    self.debit(v, dao as f64 * 8.0 * self.e_tx);
                    self.debit(p, dao as f64 * 8.0 * self.e_rx);
                }
            }
        }
        self.parents = new;
        if let Some(r) = self.trace.rounds.last_mut() {
            r.parent_changes = changes;
        }
        for v in 0..self.nodes.len() {
            self.check_death(NodeId::from_index(v));
        }
        self.sample_energy();
        for v in 0..self.nodes.len() {
            self.try_start(NodeId::from_index(v));
        }
        Ok(())
    }

    fn sample_energy(&mut self) {
        for v in 0..self.nodes.len() {
            let node = NodeId::from_index(v);
            if node == self.sink {
                continue;
            }
            let res = self.nodes[v].energy.residual();
            self.trace.energy_samples.push(EnergySample { t: self.now, node, res });
            self.log(node, EventKind::Energy { res });
        }
    }
}

/// Parent assignment chosen by the configured objective for one snapshot.
/// Tabu variants start from the cheaper of the greedy solution and
/// `previous` (when still feasible).
pub fn reoptimize_root(
    snap: &NetworkSnapshot,
    cfg: &SimConfig,
    previous: &ParentAssignment,
    params: &TabuParams,
) -> Result<(ParentAssignment, Option<TabuSummary>), SimError> {
    match cfg.protocol {
        Protocol::Of0 => Ok((min_hop_assignment(snap), None)),
        Protocol::EtxOf => {
            let costs: Vec<f64> = snap.edges().iter().map(|e| e.metrics.etx).collect();
            Ok((shortest_path_tree(snap, &costs), None))
        }
        Protocol::TabuUnnorm | Protocol::Taburpl => {
            let model = if cfg.protocol == Protocol::Taburpl {
                CostModel::normalized(cfg.weights)
            } else {
                CostModel::raw(cfg.weights)
            };
            let costs = snap.edge_costs(&model)?;
            let greedy = initial_solution(snap, &costs);
            let mut start = greedy.clone();
            if let (Ok(prev), Ok(g)) = (snap.assignment_cost(previous, &costs), snap.assignment_cost(&greedy, &costs)) {
                if prev < g {
                    start = previous.clone();
                }
            }
            let r = tabu_search_from(snap, &costs, start, params)?;
            let summary = TabuSummary {
                iterations: r.trace.iterations(),
                last_improvement: r.trace.last_improvement,
                termination: r.trace.termination,
                initial_cost: r.trace.initial_cost,
                cost: r.cost,
            };
            Ok((r.assignment, Some(summary)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transmit_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(transmit(1.0, 7, &mut rng), (1, true));
        assert_eq!(transmit(0.0, 3, &mut rng), (3, false));
        let mut total = 0u64;
        let trials = 10_000;
        for _ in 0..trials {
            total += transmit(0.5, 1000, &mut rng).0 as u64;
        }
        let mean = total as f64 / trials as f64;
        assert!((mean - 2.0).abs() < 0.1, "mean attempts {mean}");
    }

    #[test]
    fn per_hop_delay_examples() {
        assert!((per_hop_delay(0.0, 5e-3, 1e-6) - 4.999e-3).abs() < 1e-15);
        assert_eq!(per_hop_delay(0.0, 2e-3, 2e-3), 0.0);
        assert_eq!(per_hop_delay(0.0, 1e-3, 2e-3), 0.0);
    }
}
