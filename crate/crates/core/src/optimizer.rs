//! Tabu search over whole-network parent assignments, greedy baselines and
//! an exhaustive oracle for small instances.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{CostError, CostModel, NetworkSnapshot};
use crate::NodeId;

#[derive(Debug, Error, PartialEq)]
pub enum OptError {
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("exhaustive search is limited to {max} nodes, snapshot has {n}")]
    SizeLimit { n: usize, max: usize },
    #[error("invalid tabu parameters: {0}")]
    InvalidParams(String),
}

/// Parent pointer per node; `None` for the sink and for nodes outside the
/// routing tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParentAssignment {
    parent: Vec<Option<NodeId>>,
}

impl ParentAssignment {
    pub fn empty(n: usize) -> Self {
        ParentAssignment { parent: vec![None; n] }
    }

    pub fn from_parents(parent: Vec<Option<NodeId>>) -> Self {
        ParentAssignment { parent }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v.index()]
    }

    pub fn set_parent(&mut self, v: NodeId, p: Option<NodeId>) {
        self.parent[v.index()] = p;
    }

    pub fn parents(&self) -> &[Option<NodeId>] {
        &self.parent
    }

    /// Every node with a parent reaches `sink` without revisiting a node.
    pub fn is_acyclic(&self, sink: NodeId) -> bool {
        let n = self.parent.len();
        // 0 = unvisited, 1 = on current walk, 2 = known to reach the sink.
        let mut state = vec![0u8; n];
        if sink.index() < n {
            state[sink.index()] = 2;
        }
        for start in 0..n {
            if state[start] != 0 || self.parent[start].is_none() {
                continue;
            }
            let mut walk = Vec::new();
            let mut v = start;
            loop {
                match state[v] {
                    2 => break,
                    1 => return false,
                    _ => {}
                }
                state[v] = 1;
                walk.push(v);
                match self.parent[v] {
                    Some(p) if p.index() < n => v = p.index(),
                    _ => return false,
                }
            }
            for w in walk {
                state[w] = 2;
            }
        }
        true
    }

    /// Node sequence from `v` to the sink, or `None` on a cycle or dangling pointer.
    pub fn path_to_sink(&self, v: NodeId, sink: NodeId) -> Option<Vec<NodeId>> {
        let mut path = vec![v];
        let mut cur = v;
        while cur != sink {
            cur = self.parent(cur)?;
            if path.len() > self.parent.len() {
                return None;
            }
            path.push(cur);
        }
        Some(path)
    }

    /// Depth of every node in the tree; `None` where no path to the sink exists.
    pub fn depths(&self, sink: NodeId) -> Vec<Option<u32>> {
        (0..self.len())
            .map(|i| self.path_to_sink(NodeId::from_index(i), sink).map(|p| (p.len() - 1) as u32))
            .collect()
    }
}

pub fn check_acyclic(a: &ParentAssignment, sink: NodeId) -> bool {
    a.is_acyclic(sink)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TabuParams {
    pub tenure: usize,
    pub neighbourhood_cap: usize,
    pub max_iter: usize,
    pub stall_limit: usize,
    pub aspiration: f64,
    /// Stop as soon as the best cost falls below this value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_below: Option<f64>,
    pub seed: u64,
}

impl Default for TabuParams {
    fn default() -> Self {
        TabuParams {
            tenure: 30,
            neighbourhood_cap: 4000,
            max_iter: 150,
            stall_limit: 40,
            aspiration: 0.97,
            stop_below: None,
            seed: 0,
        }
    }
}

impl TabuParams {
    pub fn validate(&self) -> Result<(), OptError> {
        if self.tenure == 0 || self.neighbourhood_cap == 0 || self.max_iter == 0 || self.stall_limit == 0 {
            return Err(OptError::InvalidParams("tenure, cap, max_iter and stall_limit must be positive".into()));
        }
        if !(self.aspiration > 0.0 && self.aspiration <= 1.0) {
            return Err(OptError::InvalidParams(format!("aspiration factor must be in (0, 1], got {}", self.aspiration)));
        }
        Ok(())
    }
}

/// Reassign `node` from parent `from` to parent `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Move {
    pub node: NodeId,
    pub from: NodeId,
    pub to: NodeId,
}

impl Move {
    pub fn apply(&self, a: &ParentAssignment) -> ParentAssignment {
        let mut b = a.clone();
        b.set_parent(self.node, Some(self.to));
        b
    }

    /// The key under which a candidate is looked up: (node, new parent).
    pub fn key(&self) -> (NodeId, NodeId) {
        (self.node, self.to)
    }
}

/// Recency memory. After a move `v: p -> q` at iteration `t`, the reverse
/// key `(v, p)` is tabu for iterations `t+1 ..= t+L`.
#[derive(Debug, Clone)]
pub struct TabuList {
    tenure: usize,
    fifo: VecDeque<((NodeId, NodeId), usize)>,
    expiry: HashMap<(NodeId, NodeId), usize>,
}

impl TabuList {
    pub fn new(tenure: usize) -> Self {
        TabuList { tenure, fifo: VecDeque::new(), expiry: HashMap::new() }
    }

    pub fn insert(&mut self, key: (NodeId, NodeId), iter: usize) {
        let exp = iter + self.tenure;
        self.fifo.push_back((key, exp));
        self.expiry.insert(key, exp);
    }

    pub fn is_tabu(&self, key: (NodeId, NodeId), iter: usize) -> bool {
        self.expiry.get(&key).is_some_and(|e| iter <= *e)
    }

    /// Drops entries that are no longer tabu at `iter`.
    pub fn expire(&mut self, iter: usize) {
        while let Some(&(key, exp)) = self.fifo.front() {
            if exp >= iter {
                break;
            }
            self.fifo.pop_front();
            if self.expiry.get(&key) == Some(&exp) {
                self.expiry.remove(&key);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.expiry.len()
    }

    pub fn is_empty(&self) -> bool {
        self.expiry.is_empty()
    }
}

/// Index of the chosen candidate: the cheapest non-tabu one, where a tabu
/// candidate is admissible if its cost is below `aspiration * best_cost`.
/// If nothing is admissible the overall cheapest is returned. Ties go to
/// the lowest (node, new parent). `None` only for an empty slice.
pub fn select_best_non_tabu(
    candidates: &[(Move, f64)],
    tabu: &TabuList,
    iter: usize,
    best_cost: f64,
    aspiration: f64,
) -> Option<usize> {
    let better = |i: usize, j: Option<usize>| match j {
        None => true,
        Some(j) => {
            let (mi, ci) = candidates[i];
            let (mj, cj) = candidates[j];
            ci < cj || (ci == cj && mi.key() < mj.key())
        }
    };
    let mut admissible = None;
    let mut overall = None;
    for (i, (m, c)) in candidates.iter().enumerate() {
        if better(i, overall) {
            overall = Some(i);
        }
        let ok = !tabu.is_tabu(m.key(), iter) || *c < aspiration * best_cost;
        if ok && better(i, admissible) {
            admissible = Some(i);
        }
    }
    admissible.or(overall)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    MaxIter,
    Stall,
    Aspiration,
    /// The neighbourhood was empty.
    NoMoves,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    pub initial_cost: f64,
    /// Best cost after each iteration; non-increasing.
    pub best: Vec<f64>,
    pub current: Vec<f64>,
    pub tabu_len: Vec<usize>,
    /// Iteration (1-based) of the last strict improvement, 0 if none.
    pub last_improvement: usize,
    pub termination: Termination,
}

impl ConvergenceTrace {
    pub fn iterations(&self) -> usize {
        self.best.len()
    }

    /// One line per iteration: `iter best_cost current_cost tabu_len`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for i in 0..self.best.len() {
            let _ = writeln!(s, "{} {} {} {}", i + 1, self.best[i], self.current[i], self.tabu_len[i]);
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct TabuResult {
    pub assignment: ParentAssignment,
    pub cost: f64,
    pub trace: ConvergenceTrace,
}

/// Per-node path costs, subtree sizes and Euler-tour intervals of a tree.
struct TreeState {
    path: Vec<f64>,
    size: Vec<usize>,
    tin: Vec<usize>,
    tout: Vec<usize>,
}

impl TreeState {
    fn new(snap: &NetworkSnapshot, a: &ParentAssignment, costs: &[f64]) -> Self {
        let n = a.len();
        let mut children = vec![Vec::new(); n];
        for v in 0..n {
            if let Some(p) = a.parents()[v] {
                children[p.index()].push(v);
            }
        }
        let mut path = vec![0.0; n];
        let mut size = vec![1usize; n];
        let mut tin = vec![usize::MAX; n];
        let mut tout = vec![usize::MAX; n];
        let mut clock = 0;
        let sink = snap.sink().index();
        let mut stack = vec![(sink, 0usize)];
        tin[sink] = clock;
        clock += 1;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if *next < children[v].len() {
                let c = children[v][*next];
                *next += 1;
                let e = snap.edge_index(NodeId::from_index(c), NodeId::from_index(v)).expect("valid tree");
                path[c] = path[v] + costs[e];
                tin[c] = clock;
                clock += 1;
                stack.push((c, 0));
            } else {
                tout[v] = clock;
                stack.pop();
                if let Some(&(p, _)) = stack.last() {
                    size[p] += size[v];
                }
            }
        }
        TreeState { path, size, tin, tout }
    }

    /// `u` lies in the subtree rooted at `v` (inclusive).
    fn in_subtree(&self, u: usize, v: usize) -> bool {
        self.tin[v] <= self.tin[u] && self.tin[u] < self.tout[v]
    }
}

/// Independent path-sum evaluation of an assignment known to be a tree.
fn exact_cost(snap: &NetworkSnapshot, a: &ParentAssignment, costs: &[f64]) -> f64 {
    let pc = snap.path_costs(a, costs);
    snap.members().map(|v| pc[v.index()]).sum()
}

/// Greedy start: every member takes a parent one hop closer to the sink;
/// among those it keeps the one minimising edge cost plus the parent's
/// path cost, ties to the lower id.
pub fn initial_solution(snap: &NetworkSnapshot, costs: &[f64]) -> ParentAssignment {
    let n = snap.node_count();
    let mut order: Vec<NodeId> = snap.members().collect();
    order.sort_by_key(|v| (snap.hop(*v).unwrap(), *v));
    let mut a = ParentAssignment::empty(n);
    let mut pc = vec![0.0; n];
    for v in order {
        let hv = snap.hop(v).unwrap();
        let mut best: Option<(f64, NodeId)> = None;
        for &(q, e) in snap.candidates(v) {
            if snap.hop(q) != Some(hv - 1) {
                continue;
            }
            let c = costs[e] + pc[q.index()];
            if best.is_none_or(|(bc, _)| c < bc) {
                best = Some((c, q));
            }
        }
        let (c, q) = best.expect("a member always has a parent one hop closer");
        a.set_parent(v, Some(q));
        pc[v.index()] = c;
    }
    a
}

/// Hop-count objective: parent one hop closer, lowest id on ties.
pub fn min_hop_assignment(snap: &NetworkSnapshot) -> ParentAssignment {
    let mut a = ParentAssignment::empty(snap.node_count());
    for v in snap.members() {
        let hv = snap.hop(v).unwrap();
        let q = snap
            .candidates(v)
            .iter()
            .map(|(q, _)| *q)
            .find(|q| snap.hop(*q) == Some(hv - 1))
            .expect("a member always has a parent one hop closer");
        a.set_parent(v, Some(q));
    }
    a
}

#[derive(PartialEq)]
struct HeapItem(f64, NodeId);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Shortest-path tree towards the sink under non-negative edge costs
/// (Dijkstra on reversed edges). Equal-cost alternatives go to the lower id.
pub fn shortest_path_tree(snap: &NetworkSnapshot, costs: &[f64]) -> ParentAssignment {
    let n = snap.node_count();
    let mut incoming: Vec<Vec<(NodeId, usize)>> = vec![Vec::new(); n];
    for (i, e) in snap.edges().iter().enumerate() {
        incoming[e.to.index()].push((e.from, i));
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut a = ParentAssignment::empty(n);
    let sink = snap.sink();
    dist[sink.index()] = 0.0;
    let mut heap = BinaryHeap::from([HeapItem(0.0, sink)]);
    while let Some(HeapItem(d, v)) = heap.pop() {
        if done[v.index()] {
            continue;
        }
        done[v.index()] = true;
        for &(u, e) in &incoming[v.index()] {
            if done[u.index()] {
                continue;
            }
            let nd = d + costs[e];
            let cur = a.parent(u);
            if nd < dist[u.index()] || (nd == dist[u.index()] && cur.is_some_and(|p| v < p)) {
                dist[u.index()] = nd;
                a.set_parent(u, Some(v));
                heap.push(HeapItem(nd, u));
            }
        }
    }
    a
}

/// All single-parent moves that keep the tree acyclic. When there are more
/// than `cap`, a uniform sample of `cap` of them is returned, in order.
pub fn generate_neighbours(
    s: &ParentAssignment,
    snap: &NetworkSnapshot,
    costs: &[f64],
    cap: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Move> {
    let st = TreeState::new(snap, s, costs);
    neighbours_with_state(s, snap, &st, cap, rng)
}

fn neighbours_with_state(
    s: &ParentAssignment,
    snap: &NetworkSnapshot,
    st: &TreeState,
    cap: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Move> {
    let mut moves = Vec::new();
    for v in snap.members() {
        let p = s.parent(v).expect("members have parents");
        for &(q, _) in snap.candidates(v) {
            if q != p && !st.in_subtree(q.index(), v.index()) {
                moves.push(Move { node: v, from: p, to: q });
            }
        }
    }
    if moves.len() > cap {
        let mut idx = sample(rng, moves.len(), cap).into_vec();
        idx.sort_unstable();
        moves = idx.into_iter().map(|i| moves[i]).collect();
    }
    moves
}

pub fn tabu_search(snap: &NetworkSnapshot, model: &CostModel, params: &TabuParams) -> Result<TabuResult, OptError> {
    let costs = snap.edge_costs(model)?;
    let start = initial_solution(snap, &costs);
    tabu_search_from(snap, &costs, start, params)
}

/// Tabu search over precomputed per-edge costs from a given feasible start.
pub fn tabu_search_from(
    snap: &NetworkSnapshot,
    costs: &[f64],
    start: ParentAssignment,
    params: &TabuParams,
) -> Result<TabuResult, OptError> {
    params.validate()?;
    if costs.len() != snap.edges().len() {
        return Err(OptError::InvalidParams(format!(
            "{} edge costs for {} edges",
            costs.len(),
            snap.edges().len()
        )));
    }
    if let Some(i) = costs.iter().position(|c| !c.is_finite() || *c < 0.0) {
        return Err(OptError::InvalidParams(format!("edge cost {i} is negative or not finite")));
    }
    snap.validate_assignment(&start)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut tabu = TabuList::new(params.tenure);
    let mut current = start;
    let mut current_cost = exact_cost(snap, &current, costs);
    let mut best = current.clone();
    let mut best_cost = current_cost;
    let mut trace = ConvergenceTrace {
        initial_cost: current_cost,
        best: Vec::new(),
        current: Vec::new(),
        tabu_len: Vec::new(),
        last_improvement: 0,
        termination: Termination::MaxIter,
    };
    let improves = |new: f64, old: f64| new < old - 1e-12 * old.abs().max(1.0);

    for iter in 1..=params.max_iter {
        tabu.expire(iter);
        let st = TreeState::new(snap, &current, costs);
        let moves = neighbours_with_state(&current, snap, &st, params.neighbourhood_cap, &mut rng);
        if moves.is_empty() {
            trace.best.push(best_cost);
            trace.current.push(current_cost);
            trace.tabu_len.push(tabu.len());
            trace.termination = Termination::NoMoves;
            break;
        }
        let scored: Vec<(Move, f64)> = moves
            .into_iter()
            .map(|m| {
                let v = m.node.index();
                let e = snap.edge_index(m.node, m.to).unwrap();
                let delta = st.size[v] as f64 * (costs[e] + st.path[m.to.index()] - st.path[v]);
                (m, current_cost + delta)
            })
            .collect();
        let pick = select_best_non_tabu(&scored, &tabu, iter, best_cost, params.aspiration).unwrap();
        let mv = scored[pick].0;
        current.set_parent(mv.node, Some(mv.to));
        tabu.insert((mv.node, mv.from), iter);
        current_cost = exact_cost(snap, &current, costs);
        if improves(current_cost, best_cost) {
            best = current.clone();
            best_cost = current_cost;
            trace.last_improvement = iter;
        }
        trace.best.push(best_cost);
        trace.current.push(current_cost);
        trace.tabu_len.push(tabu.len());
        if params.stop_below.is_some_and(|t| best_cost < t) {
            trace.termination = Termination::Aspiration;
            break;
        }
        if iter - trace.last_improvement >= params.stall_limit {
            trace.termination = Termination::Stall;
            break;
        }
    }
    Ok(TabuResult { assignment: best, cost: best_cost, trace })
}

pub const BRUTE_FORCE_MAX_NODES: usize = 10;

/// Exact minimum-cost assignment by exhaustive enumeration with cycle pruning.
pub fn brute_force_optimal(snap: &NetworkSnapshot, costs: &[f64]) -> Result<(ParentAssignment, f64), OptError> {
    let n = snap.node_count();
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(OptError::SizeLimit { n, max: BRUTE_FORCE_MAX_NODES });
    }
    let members: Vec<NodeId> = snap.members().collect();
    let mut parent: Vec<Option<NodeId>> = vec![None; n];
    let mut best: Option<(Vec<Option<NodeId>>, f64)> = None;

    fn closes_cycle(parent: &[Option<NodeId>], v: NodeId) -> bool {
        let mut cur = parent[v.index()];
        let mut steps = 0;
        while let Some(u) = cur {
            if u == v {
                return true;
            }
            steps += 1;
            if steps > parent.len() {
                return true;
            }
            cur = parent[u.index()];
        }
        false
    }

    fn recurse(
        k: usize,
        members: &[NodeId],
        snap: &NetworkSnapshot,
        costs: &[f64],
        parent: &mut Vec<Option<NodeId>>,
        best: &mut Option<(Vec<Option<NodeId>>, f64)>,
    ) {
        if k == members.len() {
            let mut total = 0.0;
            for &v in members {
                let mut cur = v;
                while cur != snap.sink() {
                    let p = parent[cur.index()].unwrap();
                    total += costs[snap.edge_index(cur, p).unwrap()];
                    cur = p;
                }
            }
            if best.as_ref().is_none_or(|(_, c)| total < *c) {
                *best = Some((parent.clone(), total));
            }
            return;
        }
        let v = members[k];
        for &(q, _) in snap.candidates(v) {
            parent[v.index()] = Some(q);
            if !closes_cycle(parent, v) {
                recurse(k + 1, members, snap, costs, parent, best);
            }
        }
        parent[v.index()] = None;
    }

    recurse(0, &members, snap, costs, &mut parent, &mut best);
    let (p, c) = best.expect("a connected snapshot has at least one tree");
    Ok((ParentAssignment::from_parents(p), c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{EdgeMetrics, SnapshotBuilder};

    fn unit() -> EdgeMetrics {
        EdgeMetrics { e_r: 1.0, e_t: 0.0, d: 1.0, h: 1.0, etx: 1.0, ls: 1.0 }
    }

    fn snap(n: usize, edges: &[(u32, u32)]) -> NetworkSnapshot {
        let mut b = SnapshotBuilder::new(n, NodeId(0));
        for &(u, v) in edges {
            b.add_edge(NodeId(u), NodeId(v), unit());
        }
        b.build(0, 0.0).unwrap()
    }

    #[test]
    fn acyclic_examples() {
        let two_cycle = ParentAssignment::from_parents(vec![None, Some(NodeId(2)), Some(NodeId(1))]);
        assert!(!two_cycle.is_acyclic(NodeId(0)));
        let tree = ParentAssignment::from_parents(vec![None, Some(NodeId(0)), Some(NodeId(1))]);
        assert!(check_acyclic(&tree, NodeId(0)));
    }

    #[test]
    fn star_has_no_moves() {
        let s = snap(4, &[(1, 0), (2, 0), (3, 0)]);
        let costs = vec![1.0; 3];
        let a = initial_solution(&s, &costs);
        assert!((1..4).all(|v| a.parent(NodeId(v)) == Some(NodeId(0))));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(generate_neighbours(&a, &s, &costs, 4000, &mut rng).is_empty());
        let r = tabu_search_from(&s, &costs, a.clone(), &TabuParams::default()).unwrap();
        assert_eq!(r.assignment, a);
        assert_eq!(r.trace.iterations(), 1);
        assert_eq!(r.trace.termination, Termination::NoMoves);
    }

    #[test]
    fn chain_with_shortcut_has_one_move() {
        // a=2, b=1; 2 hears both 1 and the sink.
        let s = snap(3, &[(1, 0), (2, 1), (2, 0)]);
        let costs = vec![1.0, 1.0, 1.0];
        let start = ParentAssignment::from_parents(vec![None, Some(NodeId(0)), Some(NodeId(1))]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let moves = generate_neighbours(&start, &s, &costs, 4000, &mut rng);
        assert_eq!(moves, vec![Move { node: NodeId(2), from: NodeId(1), to: NodeId(0) }]);
    }

    #[test]
    fn chain_initial_solution() {
        let s = snap(3, &[(1, 0), (2, 1)]);
        let a = initial_solution(&s, &[1.0, 1.0]);
        assert_eq!(a.parent(NodeId(2)), Some(NodeId(1)));
        assert_eq!(a.parent(NodeId(1)), Some(NodeId(0)));
    }

    #[test]
    fn select_examples() {
        let mv = |v: u32| Move { node: NodeId(v), from: NodeId(0), to: NodeId(9) };
        let tabu = TabuList::new(30);
        let c = [(mv(1), 15.0), (mv(2), 12.0), (mv(3), 13.0)];
        assert_eq!(select_best_non_tabu(&c, &tabu, 1, 20.0, 0.97), Some(1));

        let mut tabu = TabuList::new(30);
        tabu.insert(mv(2).key(), 1);
        let c = [(mv(1), 10.0), (mv(2), 9.6)];
        assert_eq!(select_best_non_tabu(&c, &tabu, 2, 10.0, 0.97), Some(1));
        let c = [(mv(1), 10.0), (mv(2), 9.8)];
        assert_eq!(select_best_non_tabu(&c, &tabu, 2, 10.0, 0.97), Some(0));

        let c = [(mv(2), 11.0)];
        assert_eq!(select_best_non_tabu(&c, &tabu, 2, 10.0, 0.97), Some(0));
        assert_eq!(select_best_non_tabu(&[], &tabu, 2, 10.0, 0.97), None);
    }

    #[test]
    fn tenure_is_exact() {
        let mut t = TabuList::new(30);
        let k = (NodeId(1), NodeId(2));
        t.insert(k, 5);
        t.expire(35);
        assert!(t.is_tabu(k, 35));
        t.expire(36);
        assert!(!t.is_tabu(k, 36));
        assert!(t.is_empty());
    }

    #[test]
    fn brute_force_chain_with_shortcut() {
        let s = snap(3, &[(1, 0), (2, 1), (2, 0)]);
        let e10 = s.edge_index(NodeId(1), NodeId(0)).unwrap();
        let e21 = s.edge_index(NodeId(2), NodeId(1)).unwrap();
        let e20 = s.edge_index(NodeId(2), NodeId(0)).unwrap();
        let mut costs = vec![0.0; 3];
        costs[e10] = 1.0;
        costs[e21] = 1.0;
        costs[e20] = 3.0;
        // via 1: 1 + 2 = 3; direct: 1 + 3 = 4.
        let (a, c) = brute_force_optimal(&s, &costs).unwrap();
        assert_eq!(c, 3.0);
        assert_eq!(a.parent(NodeId(2)), Some(NodeId(1)));
    }

    #[test]
    fn brute_force_size_limit() {
        let edges: Vec<(u32, u32)> = (1..11).map(|v| (v, 0)).collect();
        let s = snap(11, &edges);
        assert_eq!(
            brute_force_optimal(&s, &vec![1.0; 10]).unwrap_err(),
            OptError::SizeLimit { n: 11, max: 10 }
        );
    }

    #[test]
    fn trace_text_format() {
        let t = ConvergenceTrace {
            initial_cost: 3.0,
            best: vec![2.0, 1.5],
            current: vec![2.0, 1.5],
            tabu_len: vec![1, 2],
            last_improvement: 2,
            termination: Termination::MaxIter,
        };
        assert_eq!(t.to_text(), "1 2 2 1\n2 1.5 1.5 2\n");
    }
}
