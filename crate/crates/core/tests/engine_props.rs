use dodagsim_core::analysis::compute_kpis;
use dodagsim_core::engine::{
    correct_trace_energy, parse_energy_samples, run_on, setup_topology, CtrlEnergyMode, EventKind, SnapshotAccounting,
    TraceLevel,
};
use dodagsim_core::engine::trace::CtrlMsg;
use dodagsim_core::topology::{hop_counts, Area};
use dodagsim_core::{LinkGraph, NodeId, Protocol, SimConfig, TraceLog};
use proptest::prelude::*;

fn protocol() -> impl Strategy<Value = Protocol> {
    prop::sample::select(Protocol::ALL.to_vec())
}

fn small(n: usize, rate: f64, protocol: Protocol, trace: TraceLevel) -> SimConfig {
    SimConfig {
        nodes: n,
        area: Area::new(300.0, 300.0),
        duration_s: 40.0,
        snapshot_period_s: 10.0,
        rate_pps: rate,
        protocol,
        trace,
        redraw_until_connected: true,
        ..SimConfig::default()
    }
}

fn simulate(cfg: &SimConfig, seed: u64) -> (LinkGraph, TraceLog) {
    let (field, graph) = setup_topology(cfg, seed).unwrap();
    let trace = run_on(cfg, &field, &graph, seed).unwrap();
    (graph, trace)
}

/// Per-node energy rebuilt from link counters and control events, assuming
/// every node stayed alive and control energy was charged inline.
fn energy_oracle(cfg: &SimConfig, graph: &LinkGraph, trace: &TraceLog) -> Vec<f64> {
    let etx = cfg.energy.i_tx_ma * 1e-3 * cfg.energy.v_bat / cfg.energy.bitrate_bps;
    let erx = cfg.energy.i_rx_ma * 1e-3 * cfg.energy.v_bat / cfg.energy.bitrate_bps;
    let frame = ((cfg.payload_bytes + cfg.header_bytes) * 8) as f64;
    let mut e = vec![0.0; graph.node_count()];
    for l in &trace.links {
        e[l.from.index()] += l.attempts as f64 * frame * etx;
        e[l.to.index()] += l.acks as f64 * frame * erx;
    }
    for ev in &trace.events {
        if let EventKind::Ctrl { msg, bytes, to } = ev.kind {
            let bits = bytes as f64 * 8.0;
            e[ev.node.index()] += bits * etx;
            match msg {
                CtrlMsg::Snapshot | CtrlMsg::Dis => {
                    for w in graph.neighbors(ev.node) {
                        e[w.index()] += bits * erx;
                    }
                }
                CtrlMsg::Dio | CtrlMsg::Dao => e[to.unwrap().index()] += bits * erx,
            }
        }
    }
    e[graph.sink().index()] = 0.0;
    e
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn energy_is_conserved(n in 2usize..9, rate in 0.0f64..4.0, p in protocol(), seed in any::<u64>()) {
        let cfg = small(n, rate, p, TraceLevel::Control);
        let (graph, trace) = simulate(&cfg, seed);
        prop_assert!(trace.deaths.is_empty());
        let expect = energy_oracle(&cfg, &graph, &trace);
        for v in 0..n {
            let used = trace.initial_energy - trace.final_residual[v];
            prop_assert!(trace.final_residual[v] >= 0.0);
            prop_assert!((used - expect[v]).abs() <= 1e-9 * expect[v].max(1.0), "node {v}: {used} vs {}", expect[v]);
        }
        // Residual samples never increase over time.
        let mut last = vec![f64::INFINITY; n];
        for s in &trace.energy_samples {
            prop_assert!(s.res <= last[s.node.index()]);
            last[s.node.index()] = s.res;
        }
    }

    #[test]
    fn packets_are_conserved(n in 2usize..9, rate in 0.1f64..30.0, p in protocol(), seed in any::<u64>(), q in 1usize..10) {
        let cfg = SimConfig { queue_capacity: q, ..small(n, rate, p, TraceLevel::Off) };
        let (_, trace) = simulate(&cfg, seed);
        let c = trace.counters;
        prop_assert_eq!(c.sent, c.received + c.dropped() + c.in_flight_end);
        let k = compute_kpis(&trace, &cfg).unwrap();
        prop_assert!((k.pdr + k.plr / 100.0 - 1.0).abs() <= 1e-12);
        let (att, acks) = trace.links.iter().fold((0u64, 0u64), |(a, b), l| (a + l.attempts, b + l.acks));
        prop_assert_eq!(att, c.tx_attempts);
        if att > 0 {
            prop_assert_eq!(k.lsr, acks as f64 / att as f64);
        }
        // A source emits at most ceil(rate * T) packets, so the offered-load
        // bound is exact only when rate * T is whole.
        let bits = (cfg.payload_bytes * 8) as f64;
        let per_node = (rate * cfg.duration_s).ceil();
        prop_assert!(c.sent as f64 <= per_node * (n - 1) as f64);
        prop_assert!(k.throughput_bps <= per_node * bits * (n - 1) as f64 / cfg.duration_s * (1.0 + 1e-12));
        let whole = rate.round();
        if whole > 0.0 {
            let cfg = SimConfig { rate_pps: whole, ..cfg };
            let (_, t) = simulate(&cfg, seed);
            let k = compute_kpis(&t, &cfg).unwrap();
            prop_assert!(k.throughput_bps <= whole * bits * (n - 1) as f64 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn runs_are_deterministic(n in 2usize..9, rate in 0.0f64..4.0, p in protocol(), seed in any::<u64>()) {
        let cfg = small(n, rate, p, TraceLevel::Full);
        let (_, a) = simulate(&cfg, seed);
        let (_, b) = simulate(&cfg, seed);
        prop_assert_eq!(a.to_text(), b.to_text());
        prop_assert_eq!(a.counters, b.counters);
        prop_assert_eq!(a.final_residual, b.final_residual);
    }

    #[test]
    fn min_hop_runs_use_bfs_paths(n in 2usize..9, rate in 0.1f64..3.0, seed in any::<u64>()) {
        let cfg = small(n, rate, Protocol::Of0, TraceLevel::Full);
        let (graph, trace) = simulate(&cfg, seed);
        let hops = hop_counts(&graph, graph.sink()).unwrap();
        let mut source = std::collections::HashMap::new();
        let (mut sum, mut count) = (0u64, 0u64);
        for e in &trace.events {
            match e.kind {
                EventKind::Send { pkt } => {
                    source.insert(pkt, e.node);
                }
                EventKind::Recv { pkt, hop } => {
                    let src: NodeId = source[&pkt];
                    prop_assert_eq!(hop, hops[src.index()]);
                    sum += hops[src.index()] as u64;
                    count += 1;
                }
                _ => {}
            }
        }
        if count > 0 {
            let k = compute_kpis(&trace, &cfg).unwrap();
            prop_assert!((k.avg_path_length.unwrap() - sum as f64 / count as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn deferred_accounting_matches_inline(n in 2usize..9, rate in 0.0f64..3.0, p in prop::sample::select(vec![Protocol::Of0, Protocol::EtxOf]), seed in any::<u64>()) {
        let inline = small(n, rate, p, TraceLevel::Control);
        let deferred = SimConfig { ctrl_energy: CtrlEnergyMode::Deferred, ..inline.clone() };
        let (graph, a) = simulate(&inline, seed);
        let (_, b) = simulate(&deferred, seed);
        let acct = SnapshotAccounting::from_graph(&graph, inline.control, inline.snapshot_period_s, &inline.energy);
        let fixed = parse_energy_samples(&correct_trace_energy(&b.to_text(), &acct).unwrap()).unwrap();
        let want = parse_energy_samples(&a.to_text()).unwrap();
        prop_assert_eq!(fixed.len(), want.len());
        for (x, y) in fixed.iter().zip(&want) {
            prop_assert_eq!((x.t, x.node), (y.t, y.node));
            prop_assert!((x.res - y.res).abs() <= 1e-9);
        }
    }
}
