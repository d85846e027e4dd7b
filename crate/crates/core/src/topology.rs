//! Node deployment, radio/link model, hop counts and the plain-text edge list.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::NodeId;

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{} node(s) cannot reach the sink: {orphans:?}", orphans.len())]
    Disconnected { orphans: Vec<NodeId> },
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),
    #[error("edge list line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

impl Area {
    pub fn new(width: f64, height: f64) -> Self {
        Area { width, height }
    }

    pub fn center(&self) -> Position {
        Position { x: self.width / 2.0, y: self.height / 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A static deployment. Node `i` sits at `positions[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeField {
    pub positions: Vec<Position>,
    pub sink: NodeId,
    pub area: Area,
    pub seed: u64,
}

impl NodeField {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> f64 {
        self.positions[a.index()].distance(&self.positions[b.index()])
    }

    pub fn distance_to_sink(&self, v: NodeId) -> f64 {
        self.distance(v, self.sink)
    }
}

/// Places `n` nodes: node 0 is the sink at the area centre, the remaining
/// `n - 1` are i.i.d. uniform over the area.
pub fn deploy_uniform(n: usize, area: Area, seed: u64) -> Result<NodeField, TopologyError> {
    deploy_uniform_with_sink(n, area, seed, None)
}

pub fn deploy_uniform_with_sink(
    n: usize,
    area: Area,
    seed: u64,
    sink_position: Option<Position>,
) -> Result<NodeField, TopologyError> {
    if n == 0 {
        return Err(TopologyError::InvalidArgument("node count must be at least 1".into()));
    }
    if !(area.width > 0.0 && area.height > 0.0) {
        return Err(TopologyError::InvalidArgument(format!(
            "area dimensions must be positive, got {}x{}",
            area.width, area.height
        )));
    }
    let sink_pos = sink_position.unwrap_or_else(|| area.center());
    if !(0.0..=area.width).contains(&sink_pos.x) || !(0.0..=area.height).contains(&sink_pos.y) {
        return Err(TopologyError::InvalidArgument("sink position outside the area".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = Vec::with_capacity(n);
    positions.push(sink_pos);
    for _ in 1..n {
        let x = rng.random::<f64>() * area.width;
        let y = rng.random::<f64>() * area.height;
        positions.push(Position { x, y });
    }
    Ok(NodeField { positions, sink: NodeId(0), area, seed })
}

/// Delivery probability as a function of distance for the unit-disc model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "curve", rename_all = "kebab-case")]
pub enum DeliveryCurve {
    /// Linear from 1.0 at d = 0 down to `at_range` at d = range.
    Linear { at_range: f64 },
    Constant { p: f64 },
}

impl DeliveryCurve {
    fn eval(&self, d: f64, range: f64) -> f64 {
        match *self {
            DeliveryCurve::Linear { at_range } => 1.0 - (1.0 - at_range) * (d / range).clamp(0.0, 1.0),
            DeliveryCurve::Constant { p } => p,
        }
    }
}

impl Default for DeliveryCurve {
    fn default() -> Self {
        DeliveryCurve::Linear { at_range: 0.7 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadioKind {
    UnitDisc,
    LogNormalShadowing,
}

/// Radio propagation model.
///
/// For the shadowing model `range_m` is the nominal range: the distance at
/// which the mean received power equals the receiver sensitivity. The link
/// margin is `10 n log10(range / d) + X` with `X ~ N(0, sigma^2)` frozen per
/// node pair, an edge exists iff the margin is non-negative, and the delivery
/// probability follows a logistic packet-reception curve over the margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadioModel {
    pub kind: RadioKind,
    pub range_m: f64,
    pub shadowing_sigma_db: f64,
    pub path_loss_exponent: f64,
    pub delivery: DeliveryCurve,
    /// Margin (dB) at which the reception rate is 50 %.
    pub prr_midpoint_db: f64,
    pub prr_width_db: f64,
}

impl Default for RadioModel {
    fn default() -> Self {
        RadioModel {
            kind: RadioKind::UnitDisc,
            range_m: 250.0,
            shadowing_sigma_db: 4.0,
            path_loss_exponent: 3.0,
            delivery: DeliveryCurve::default(),
            prr_midpoint_db: 2.0,
            prr_width_db: 1.0,
        }
    }
}

impl RadioModel {
    pub fn unit_disc(range_m: f64) -> Self {
        RadioModel { kind: RadioKind::UnitDisc, range_m, ..Default::default() }
    }

    pub fn shadowing(range_m: f64, sigma_db: f64) -> Self {
        RadioModel {
            kind: RadioKind::LogNormalShadowing,
            range_m,
            shadowing_sigma_db: sigma_db,
            ..Default::default()
        }
    }

    pub fn with_delivery(mut self, delivery: DeliveryCurve) -> Self {
        self.delivery = delivery;
        self
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        if !(self.range_m > 0.0) {
            return Err(TopologyError::InvalidArgument("radio range must be > 0".into()));
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            return Err(TopologyError::InvalidArgument("shadowing sigma must be >= 0".into()));
        }
        if !(self.path_loss_exponent > 0.0) || !(self.prr_width_db > 0.0) {
            return Err(TopologyError::InvalidArgument(
                "path loss exponent and PRR width must be > 0".into(),
            ));
        }
        Ok(())
    }

    fn prr(&self, margin_db: f64) -> f64 {
        1.0 / (1.0 + (-(margin_db - self.prr_midpoint_db) / self.prr_width_db).exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub from: NodeId,
    pub to: NodeId,
    pub distance: f64,
    pub delivery: f64,
}

/// Directed link graph. Edges are stored in ascending `(from, to)` order.
#[derive(Debug, Clone)]
pub struct LinkGraph {
    n: usize,
    sink: NodeId,
    seed: u64,
    links: Vec<Link>,
    out: Vec<Vec<EdgeId>>,
    inc: Vec<Vec<EdgeId>>,
    index: HashMap<(NodeId, NodeId), EdgeId>,
}

impl LinkGraph {
    /// Builds a graph from explicit links. Self-loops are rejected.
    pub fn from_links(
        n: usize,
        sink: NodeId,
        seed: u64,
        mut links: Vec<Link>,
    ) -> Result<Self, TopologyError> {
        if sink.index() >= n {
            return Err(TopologyError::InvalidArgument(format!("sink {sink} out of range")));
        }
        links.sort_by_key(|l| (l.from, l.to));
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        let mut index = HashMap::with_capacity(links.len());
        for (i, l) in links.iter().enumerate() {
            if l.from == l.to {
                return Err(TopologyError::InvalidArgument(format!("self-loop at {}", l.from)));
            }
            if l.from.index() >= n || l.to.index() >= n {
                return Err(TopologyError::InvalidArgument(format!(
                    "edge {}->{} references an unknown node",
                    l.from, l.to
                )));
            }
            if !(l.delivery > 0.0 && l.delivery <= 1.0) || !(l.distance >= 0.0) {
                return Err(TopologyError::InvalidArgument(format!(
                    "edge {}->{} has delivery {} / distance {}",
                    l.from, l.to, l.delivery, l.distance
                )));
            }
            if index.insert((l.from, l.to), EdgeId(i)).is_some() {
                return Err(TopologyError::InvalidArgument(format!(
                    "duplicate edge {}->{}",
                    l.from, l.to
                )));
            }
            out[l.from.index()].push(EdgeId(i));
            inc[l.to.index()].push(EdgeId(i));
        }
        Ok(LinkGraph { n, sink, seed, links, out, inc, index })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn sink(&self) -> NodeId {
        self.sink
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, e: EdgeId) -> &Link {
        &self.links[e.0]
    }

    pub fn edge_between(&self, from: NodeId, to: NodeId) -> Option<EdgeId> {
        self.index.get(&(from, to)).copied()
    }

    pub fn out_edges(&self, v: NodeId) -> &[EdgeId] {
        &self.out[v.index()]
    }

    pub fn in_edges(&self, v: NodeId) -> &[EdgeId] {
        &self.inc[v.index()]
    }

    pub fn neighbors(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.out[v.index()].iter().map(move |e| self.links[e.0].to)
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.out[v.index()].len()
    }

    pub fn mean_degree(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.links.len() as f64 / self.n as f64
    }

    /// Writes the graph as `# nodes=<n> sink=<id> seed=<s>` followed by one
    /// `u v d_meters p_delivery` line per directed edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("# nodes={} sink={} seed={}\n", self.n, self.sink, self.seed);
        for l in &self.links {
            let _ = writeln!(s, "{} {} {} {}", l.from, l.to, l.distance, l.delivery);
        }
        s
    }

    pub fn from_edge_list(text: &str) -> Result<Self, TopologyError> {
        let mut header: Option<(usize, NodeId, u64)> = None;
        let mut links = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| TopologyError::Parse { line: line_no, msg };
            if let Some(rest) = line.strip_prefix('#') {
                if header.is_some() {
                    continue;
                }
                let mut n = None;
                let mut sink = None;
                let mut seed = None;
                for kv in rest.split_whitespace() {
                    let (k, v) = kv.split_once('=').ok_or_else(|| perr(format!("bad header field `{kv}`")))?;
                    match k {
                        "nodes" => n = Some(v.parse::<usize>().map_err(|e| perr(e.to_string()))?),
                        "sink" => sink = Some(NodeId(v.parse::<u32>().map_err(|e| perr(e.to_string()))?)),
                        "seed" => seed = Some(v.parse::<u64>().map_err(|e| perr(e.to_string()))?),
                        _ => {}
                    }
                }
                match (n, sink, seed) {
                    (Some(n), Some(sink), Some(seed)) => header = Some((n, sink, seed)),
                    _ => return Err(perr("header needs nodes=, sink= and seed=".into())),
                }
                continue;
            }
            if header.is_none() {
                return Err(perr("edge before header".into()));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(perr(format!("expected 4 fields, got {}", fields.len())));
            }
            let from = NodeId(fields[0].parse().map_err(|e: std::num::ParseIntError| perr(e.to_string()))?);
            let to = NodeId(fields[1].parse().map_err(|e: std::num::ParseIntError| perr(e.to_string()))?);
            let distance = fields[2].parse().map_err(|e: std::num::ParseFloatError| perr(e.to_string()))?;
            let delivery = fields[3].parse().map_err(|e: std::num::ParseFloatError| perr(e.to_string()))?;
            links.push(Link { from, to, distance, delivery });
        }
        let (n, sink, seed) = header.ok_or(TopologyError::Parse { line: 0, msg: "missing header".into() })?;
        LinkGraph::from_links(n, sink, seed, links)
    }
}

/// Builds the link graph for a deployment; fails if any node cannot reach
/// the sink.
pub fn build_links(field: &NodeField, radio: &RadioModel, seed: u64) -> Result<LinkGraph, TopologyError> {
    let g = build_links_unchecked(field, radio, seed)?;
    hop_counts(&g, g.sink())?;
    Ok(g)
}

/// Like [`build_links`] but tolerates disconnected deployments.
pub fn build_links_unchecked(
    field: &NodeField,
    radio: &RadioModel,
    seed: u64,
) -> Result<LinkGraph, TopologyError> {
    if field.is_empty() {
        return Err(TopologyError::InvalidArgument("empty field".into()));
    }
    radio.validate()?;
    let n = field.len();
    let mut links = Vec::new();
    match radio.kind {
        RadioKind::UnitDisc => {
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let d = field.positions[i].distance(&field.positions[j]);
                    if d <= radio.range_m {
                        let p = radio.delivery.eval(d, radio.range_m).clamp(f64::MIN_POSITIVE, 1.0);
                        links.push(Link { from: NodeId::from_index(i), to: NodeId::from_index(j), distance: d, delivery: p });
                    }
                }
            }
        }
        RadioKind::LogNormalShadowing => {
            // One frozen draw per unordered pair, in (i, j) index order.
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ad0_a11e_d0e5_f00d);
            let normal = Normal::new(0.0, radio.shadowing_sigma_db)
                .map_err(|e| TopologyError::InvalidArgument(e.to_string()))?;
            for i in 0..n {
                for j in (i + 1)..n {
                    let x = normal.sample(&mut rng);
                    let d = field.positions[i].distance(&field.positions[j]);
                    let margin = if d > 0.0 {
                        10.0 * radio.path_loss_exponent * (radio.range_m / d).log10() + x
                    } else {
                        f64::INFINITY
                    };
                    if margin >= 0.0 {
                        let p = radio.prr(margin).clamp(f64::MIN_POSITIVE, 1.0);
                        links.push(Link { from: NodeId::from_index(i), to: NodeId::from_index(j), distance: d, delivery: p });
                        links.push(Link { from: NodeId::from_index(j), to: NodeId::from_index(i), distance: d, delivery: p });
                    }
                }
            }
        }
    }
    LinkGraph::from_links(n, field.sink, seed, links)
}

/// Deploys and builds links, redrawing with incremented seeds until the graph
/// is connected. Returns the seed that was finally used.
pub fn deploy_connected(
    n: usize,
    area: Area,
    sink_position: Option<Position>,
    radio: &RadioModel,
    seed: u64,
    max_redraws: u32,
) -> Result<(NodeField, LinkGraph, u64), TopologyError> {
    let mut last_err = None;
    for k in 0..=max_redraws as u64 {
        let s = seed.wrapping_add(k);
        let field = deploy_uniform_with_sink(n, area, s, sink_position)?;
        match build_links(&field, radio, s) {
            Ok(g) => return Ok((field, g, s)),
            Err(e @ TopologyError::Disconnected { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

/// Breadth-first hop distance to `sink` along directed edges, restricted to
/// nodes with `alive[v]`. Unreachable nodes map to `None`.
pub fn hop_counts_masked(graph: &LinkGraph, sink: NodeId, alive: Option<&[bool]>) -> Vec<Option<u32>> {
    let is_alive = |v: NodeId| alive.is_none_or(|a| a[v.index()]);
    let mut h = vec![None; graph.node_count()];
    if !is_alive(sink) {
        return h;
    }
    h[sink.index()] = Some(0);
    let mut queue = VecDeque::from([sink]);
    while let Some(v) = queue.pop_front() {
        let hv = h[v.index()].unwrap();
        for e in graph.in_edges(v) {
            let u = graph.link(*e).from;
            if h[u.index()].is_none() && is_alive(u) {
                h[u.index()] = Some(hv + 1);
                queue.push_back(u);
            }
        }
    }
    h
}

pub fn hop_counts(graph: &LinkGraph, sink: NodeId) -> Result<Vec<u32>, TopologyError> {
    let h = hop_counts_masked(graph, sink, None);
    let orphans: Vec<NodeId> = h
        .iter()
        .enumerate()
        .filter(|(_, x)| x.is_none())
        .map(|(i, _)| NodeId::from_index(i))
        .collect();
    if !orphans.is_empty() {
        return Err(TopologyError::Disconnected { orphans });
    }
    Ok(h.into_iter().map(|x| x.unwrap()).collect())
}

/// Sample Pearson correlation coefficient.
pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> Result<f64, TopologyError> {
    if xs.len() != ys.len() {
        return Err(TopologyError::InvalidArgument("series lengths differ".into()));
    }
    if xs.len() < 2 {
        return Err(TopologyError::InvalidArgument("need at least two samples".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(TopologyError::UndefinedCorrelation("zero variance"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(points: &[(f64, f64)]) -> NodeField {
        NodeField {
            positions: points.iter().map(|&(x, y)| Position { x, y }).collect(),
            sink: NodeId(0),
            area: Area::new(1000.0, 1000.0),
            seed: 0,
        }
    }

    #[test]
    fn deploy_baseline_in_bounds() {
        let f = deploy_uniform(50, Area::new(1000.0, 1000.0), 1).unwrap();
        assert_eq!(f.len(), 50);
        for p in &f.positions {
            assert!((0.0..=1000.0).contains(&p.x) && (0.0..=1000.0).contains(&p.y));
        }
        assert_eq!(f.positions[0], Position { x: 500.0, y: 500.0 });
    }

    #[test]
    fn deploy_single_node_is_sink() {
        let f = deploy_uniform(1, Area::new(10.0, 10.0), 7).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f.sink, NodeId(0));
    }

    #[test]
    fn deploy_is_deterministic() {
        let a = deploy_uniform(50, Area::new(1000.0, 1000.0), 42).unwrap();
        let b = deploy_uniform(50, Area::new(1000.0, 1000.0), 42).unwrap();
        let bits = |f: &NodeField| f.positions.iter().flat_map(|p| [p.x.to_bits(), p.y.to_bits()]).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn deploy_rejects_bad_arguments() {
        assert!(matches!(deploy_uniform(0, Area::new(1.0, 1.0), 0), Err(TopologyError::InvalidArgument(_))));
        assert!(deploy_uniform(3, Area::new(0.0, 1.0), 0).is_err());
    }

    #[test]
    fn unit_disc_within_and_beyond_range() {
        let g = build_links_unchecked(&field(&[(0.0, 0.0), (10.0, 0.0)]), &RadioModel::unit_disc(50.0), 0).unwrap();
        assert_eq!(g.links().len(), 2);
        let e = g.edge_between(NodeId(1), NodeId(0)).unwrap();
        assert_eq!(g.link(e).distance, 10.0);
        assert!(g.edge_between(NodeId(0), NodeId(1)).is_some());

        let g = build_links_unchecked(&field(&[(0.0, 0.0), (60.0, 0.0)]), &RadioModel::unit_disc(50.0), 0).unwrap();
        assert!(g.links().is_empty());
        assert!(matches!(build_links(&field(&[(0.0, 0.0), (60.0, 0.0)]), &RadioModel::unit_disc(50.0), 0),
            Err(TopologyError::Disconnected { orphans }) if orphans == vec![NodeId(1)]));
    }

    #[test]
    fn linear_falloff_endpoints() {
        let g = build_links_unchecked(&field(&[(0.0, 0.0), (50.0, 0.0), (25.0, 0.0)]), &RadioModel::unit_disc(50.0), 0).unwrap();
        let far = g.link(g.edge_between(NodeId(0), NodeId(1)).unwrap()).delivery;
        let mid = g.link(g.edge_between(NodeId(0), NodeId(2)).unwrap()).delivery;
        assert!((far - 0.7).abs() < 1e-12);
        assert!((mid - 0.85).abs() < 1e-12);
    }

    #[test]
    fn shadowing_changes_edge_sets() {
        let area = Area::new(1000.0, 1000.0);
        let mut differs = 0;
        for seed in 0..10 {
            let f = deploy_uniform(50, area, seed).unwrap();
            let a = build_links_unchecked(&f, &RadioModel::shadowing(250.0, 4.0), seed).unwrap();
            let b = build_links_unchecked(&f, &RadioModel::shadowing(250.0, 0.0), seed).unwrap();
            let ea: Vec<_> = a.links().iter().map(|l| (l.from, l.to)).collect();
            let eb: Vec<_> = b.links().iter().map(|l| (l.from, l.to)).collect();
            if ea != eb {
                differs += 1;
            }
        }
        assert!(differs >= 1);
    }

    #[test]
    fn hop_counts_chain() {
        // a(2) - b(1) - sink(0), 40 m spacing, 50 m range.
        let g = build_links(&field(&[(0.0, 0.0), (40.0, 0.0), (80.0, 0.0)]), &RadioModel::unit_disc(50.0), 0).unwrap();
        let h = hop_counts(&g, NodeId(0)).unwrap();
        assert_eq!(h, vec![0, 1, 2]);
    }

    #[test]
    fn pearson_examples() {
        assert!((pearson_correlation(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson_correlation(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert!((pearson_correlation(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(
            pearson_correlation(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(TopologyError::UndefinedCorrelation("zero variance"))
        );
    }

    #[test]
    fn edge_list_round_trip() {
        let f = deploy_uniform(20, Area::new(300.0, 300.0), 3).unwrap();
        let g = build_links_unchecked(&f, &RadioModel::shadowing(120.0, 4.0), 3).unwrap();
        let text = g.to_edge_list();
        assert!(text.starts_with("# nodes=20 sink=0 seed=3\n"));
        let back = LinkGraph::from_edge_list(&text).unwrap();
        assert_eq!(back.links(), g.links());
        assert_eq!(back.sink(), g.sink());
    }

    #[test]
    fn edge_list_parse_error_has_line() {
        let err = LinkGraph::from_edge_list("# nodes=2 sink=0 seed=1\n0 1 3.0\n").unwrap_err();
        assert!(matches!(err, TopologyError::Parse { line: 2, .. }));
    }
}
