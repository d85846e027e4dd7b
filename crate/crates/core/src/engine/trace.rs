//! Event trace, its text form, and the post-hoc control-energy correction.

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::engine::accounting::SnapshotAccounting;
use crate::engine::config::{CtrlEnergyMode, Protocol};
use crate::optimizer::Termination;
use crate::NodeId;

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("trace line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    Queue,
    Retry,
    NoRoute,
    Dead,
}

impl DropReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            DropReason::Queue => "queue",
            DropReason::Retry => "retry",
            DropReason::NoRoute => "noroute",
            DropReason::Dead => "dead",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtrlMsg {
    Snapshot,
    Dis,
    Dio,
    Dao,
}

impl CtrlMsg {
    pub fn as_str(&self) -> &'static str {
        match self {
            CtrlMsg::Snapshot => "snap",
            CtrlMsg::Dis => "dis",
            CtrlMsg::Dio => "dio",
            CtrlMsg::Dao => "dao",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    Send { pkt: u64 },
    Recv { pkt: u64, hop: u32 },
    Drop { pkt: u64, why: DropReason },
    /// One completed MAC exchange for a packet: `att` attempts, acked or not.
    Tx { pkt: u64, att: u32, ok: bool, q: usize },
    /// `to` is the addressee of a unicast message (DIO, DAO); broadcasts have none.
    Ctrl { msg: CtrlMsg, bytes: u64, to: Option<NodeId> },
    Energy { res: f64 },
    Dead,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub node: NodeId,
    pub kind: EventKind,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (t, node) = (self.t, self.node);
        match self.kind {
            EventKind::Send { pkt } => write!(f, "t={t} ev=send node={node} pkt={pkt}"),
            EventKind::Recv { pkt, hop } => write!(f, "t={t} ev=recv node={node} pkt={pkt} hop={hop}"),
            EventKind::Drop { pkt, why } => write!(f, "t={t} ev=drop node={node} pkt={pkt} why={}", why.as_str()),
            EventKind::Tx { pkt, att, ok, q } => {
                write!(f, "t={t} ev=tx node={node} pkt={pkt} att={att} ok={} q={q}", ok as u8)
            }
            EventKind::Ctrl { msg, bytes, to } => {
                write!(f, "t={t} ev=ctrl node={node} msg={} bytes={bytes}", msg.as_str())?;
                match to {
                    Some(w) => write!(f, " to={w}"),
                    None => Ok(()),
                }
            }
            EventKind::Energy { res } => write!(f, "t={t} ev=energy node={node} res={res}"),
            EventKind::Dead => write!(f, "t={t} ev=dead node={node}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySample {
    pub t: f64,
    pub node: NodeId,
    pub res: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkCounter {
    pub from: NodeId,
    pub to: NodeId,
    pub attempts: u64,
    pub acks: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Counters {
    pub sent: u64,
    pub received: u64,
    pub drop_queue: u64,
    pub drop_retry: u64,
    pub drop_noroute: u64,
    pub drop_dead: u64,
    pub in_flight_end: u64,
    pub tx_attempts: u64,
    pub tx_acks: u64,
    pub ctrl_messages: u64,
    pub ctrl_bytes: u64,
    pub snapshot_bytes: u64,
    pub repair_bytes: u64,
    pub dao_bytes: u64,
    pub hop_sum: u64,
    pub delay_sum_s: f64,
    pub per_hop_delay_sum_s: f64,
    pub per_hop_samples: u64,
    pub delivered_payload_bits: u64,
}

impl Counters {
    pub fn dropped(&self) -> u64 {
        self.drop_queue + self.drop_retry + self.drop_noroute + self.drop_dead
    }
}

/// Optimiser outcome at one snapshot, for tabu-based protocols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabuSummary {
    pub iterations: usize,
    pub last_improvement: usize,
    pub termination: Termination,
    pub initial_cost: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRound {
    pub index: u64,
    pub t: f64,
    pub bytes: u64,
    /// Mean alive-neighbour count over alive nodes.
    pub mean_k: f64,
    pub parent_changes: usize,
    pub tabu: Option<TabuSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceHeader {
    pub seed: u64,
    pub protocol: Protocol,
    pub nodes: usize,
    pub sink: NodeId,
    pub duration_s: f64,
    pub period_s: f64,
    pub rate_pps: f64,
    pub payload_bytes: u32,
    pub ctrl_energy: CtrlEnergyMode,
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct TraceLog {
    pub header: TraceHeader,
    /// Recorded events, depending on the configured trace level.
    pub events: Vec<Event>,
    pub counters: Counters,
    /// Residual energy of every non-sink node after each snapshot round and at the end.
    pub energy_samples: Vec<EnergySample>,
    pub links: Vec<LinkCounter>,
    pub initial_energy: f64,
    pub final_residual: Vec<f64>,
    pub rounds: Vec<SnapshotRound>,
    pub deaths: Vec<(f64, NodeId)>,
    /// Per-edge (transmitter distance to sink, transmitter hop count) pairs.
    pub dh_samples: Vec<(f64, f64)>,
    pub end_time: f64,
}

impl TraceLog {
    /// Energy used by non-sink nodes.
    pub fn energy_consumed(&self) -> Vec<f64> {
        self.final_residual
            .iter()
            .enumerate()
            .filter(|(i, _)| NodeId::from_index(*i) != self.header.sink)
            .map(|(_, r)| self.initial_energy - r)
            .collect()
    }

    pub fn header_line(&self) -> String {
        let h = &self.header;
        let mode = match h.ctrl_energy {
            CtrlEnergyMode::Inline => "inline",
            CtrlEnergyMode::Deferred => "deferred",
        };
        format!(
            "# seed={} protocol={} nodes={} sink={} duration={} period={} rate={} payload={} ctrl_energy={}",
            h.seed, h.protocol, h.nodes, h.sink, h.duration_s, h.period_s, h.rate_pps, h.payload_bytes, mode
        )
    }

    /// Plain-text trace: a header comment, then one event per line.
    pub fn to_text(&self) -> String {
        let mut s = self.header_line();
        s.push('\n');
        for e in &self.events {
            let _ = writeln!(s, "{e}");
        }
        s
    }
}

/// Parsed `key=value` fields of one trace line.
struct Fields<'a> {
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Fields<'a> {
    fn parse(line: &'a str, line_no: usize) -> Result<Self, TraceError> {
        let mut pairs = Vec::new();
        for tok in line.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| TraceError::Parse { line: line_no, msg: format!("expected key=value, got `{tok}`") })?;
            pairs.push((k, v));
        }
        Ok(Fields { pairs })
    }

    fn get(&self, key: &str) -> Option<&'a str> {
        self.pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    fn require<T: std::str::FromStr>(&self, key: &str, line_no: usize) -> Result<T, TraceError> {
        let raw = self.get(key).ok_or_else(|| TraceError::Parse { line: line_no, msg: format!("missing `{key}=`") })?;
        raw.parse()
            .map_err(|_| TraceError::Parse { line: line_no, msg: format!("bad value for `{key}`: `{raw}`") })
    }
}

const EVENT_NAMES: [&str; 7] = ["send", "recv", "drop", "tx", "ctrl", "energy", "dead"];

fn check_event_line(f: &Fields<'_>, line_no: usize) -> Result<(f64, &'static str, NodeId), TraceError> {
    let t: f64 = f.require("t", line_no)?;
    let ev: String = f.require("ev", line_no)?;
    let name = EVENT_NAMES
        .iter()
        .find(|n| **n == ev)
        .ok_or_else(|| TraceError::Parse { line: line_no, msg: format!("unknown event `{ev}`") })?;
    let node = NodeId(f.require("node", line_no)?);
    Ok((t, name, node))
}

/// Residual-energy samples (`ev=energy`) of a text trace, in order.
pub fn parse_energy_samples(text: &str) -> Result<Vec<EnergySample>, TraceError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f = Fields::parse(line, i + 1)?;
        let (t, ev, node) = check_event_line(&f, i + 1)?;
        if ev == "energy" {
            out.push(EnergySample { t, node, res: f.require("res", i + 1)? });
        }
    }
    Ok(out)
}

/// Deducts snapshot control energy from the `res=` values of a trace that
/// was produced with deferred control-energy accounting. Each `ctrl
/// msg=snap` line charges its sender for the bytes sent and every radio
/// neighbour still alive for the bytes heard; later residual values of a
/// node are reduced by its running total. Traces already accounted inline
/// (or already corrected) are returned unchanged.
pub fn correct_trace_energy(text: &str, acct: &SnapshotAccounting) -> Result<String, TraceError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    let mode = header
        .strip_prefix('#')
        .and_then(|h| h.split_whitespace().find_map(|kv| kv.strip_prefix("ctrl_energy=")))
        .ok_or(TraceError::Parse { line: 1, msg: "header without ctrl_energy=".into() })?;
    match mode {
        "inline" | "corrected" => return Ok(text.to_string()),
        "deferred" => {}
        other => return Err(TraceError::Parse { line: 1, msg: format!("unknown ctrl_energy mode `{other}`") }),
    }
    let n = acct.node_count();
    let mut deducted = vec![0.0f64; n];
    let mut alive = vec![true; n];
    let mut out = String::with_capacity(text.len());
    out.push_str(&header.replacen("ctrl_energy=deferred", "ctrl_energy=corrected", 1));
    out.push('\n');
    for (i, raw) in lines.enumerate() {
        let line_no = i + 2;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            out.push_str(raw);
            out.push('\n');
            continue;
        }
        let f = Fields::parse(line, line_no)?;
        let (_, ev, node) = check_event_line(&f, line_no)?;
        if node.index() >= n {
            return Err(TraceError::Parse { line: line_no, msg: format!("node {node} not in the accounting") });
        }
        match ev {
            "dead" => alive[node.index()] = false,
            "ctrl" if f.get("msg") == Some("snap") => {
                let bytes: u64 = f.require("bytes", line_no)?;
                let bits = bytes as f64 * 8.0;
                if node != acct.sink {
                    deducted[node.index()] += bits * acct.e_tx_per_bit;
                }
                for w in &acct.neighbours[node.index()] {
                    if *w != acct.sink && alive[w.index()] {
                        deducted[w.index()] += bits * acct.e_rx_per_bit;
                    }
                }
            }
            _ => {}
        }
        if f.get("res").is_some() {
            let res: f64 = f.require("res", line_no)?;
            let corrected = (res - deducted[node.index()]).max(0.0);
            let rewritten: Vec<String> = line
                .split_whitespace()
                .map(|tok| if tok.starts_with("res=") { format!("res={corrected}") } else { tok.to_string() })
                .collect();
            out.push_str(&rewritten.join(" "));
        } else {
            out.push_str(raw);
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::config::{ControlSizes, RadioEnergyParams};

    fn acct() -> SnapshotAccounting {
        SnapshotAccounting::new(
            ControlSizes::default(),
            90.0,
            &RadioEnergyParams::default(),
            NodeId(0),
            vec![vec![NodeId(1)], vec![NodeId(0)]],
        )
    }

    #[test]
    fn event_text_format() {
        let e = Event { t: 1.5, node: NodeId(3), kind: EventKind::Drop { pkt: 7, why: DropReason::Retry } };
        assert_eq!(e.to_string(), "t=1.5 ev=drop node=3 pkt=7 why=retry");
        let e = Event { t: 90.0, node: NodeId(1), kind: EventKind::Ctrl { msg: CtrlMsg::Snapshot, bytes: 24, to: None } };
        assert_eq!(e.to_string(), "t=90 ev=ctrl node=1 msg=snap bytes=24");
        let e = Event { t: 90.0, node: NodeId(4), kind: EventKind::Ctrl { msg: CtrlMsg::Dao, bytes: 24, to: Some(NodeId(2)) } };
        assert_eq!(e.to_string(), "t=90 ev=ctrl node=4 msg=dao bytes=24 to=2");
    }

    #[test]
    fn inline_trace_is_untouched() {
        let text = "# seed=1 ctrl_energy=inline\nt=90 ev=energy node=1 res=5\n";
        assert_eq!(correct_trace_energy(text, &acct()).unwrap(), text);
    }

    #[test]
    fn single_node_single_round() {
        let text = "# seed=1 ctrl_energy=deferred\n\
                    t=90 ev=ctrl node=0 msg=snap bytes=24\n\
                    t=90 ev=ctrl node=1 msg=snap bytes=24\n\
                    t=90 ev=energy node=1 res=1000\n";
        let out = correct_trace_energy(text, &acct()).unwrap();
        let s = parse_energy_samples(&out).unwrap();
        let e_ctrl = 192.0 * 2.088e-7 + 192.0 * 2.364e-7;
        assert!((s[0].res - (1000.0 - e_ctrl)).abs() < 1e-12);
        assert!(out.starts_with("# seed=1 ctrl_energy=corrected\n"));
        assert_eq!(correct_trace_energy(&out, &acct()).unwrap(), out);
    }

    #[test]
    fn malformed_line_reports_number() {
        let text = "# ctrl_energy=deferred\nt=1 ev=send node=1 pkt=0\nt=2 ev=bogus node=1\n";
        assert!(matches!(correct_trace_energy(text, &acct()), Err(TraceError::Parse { line: 3, .. })));
        let text = "# ctrl_energy=deferred\nt=1 garbage\n";
        assert!(matches!(correct_trace_energy(text, &acct()), Err(TraceError::Parse { line: 2, .. })));
    }
}
