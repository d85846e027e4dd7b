use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dodagsim::ablation::{metric_index, run_ablation, write_ablation, AblationSpec};
use dodagsim::calibrate::{run_calibration, write_calibration};
use dodagsim::config::ExperimentConfig;
use dodagsim::matrix::{run_matrix, write_matrix};
use dodagsim::output::{check_not_input, fmt_opt, prepare_out_dir, write_rows, write_table, ResultRow};
use dodagsim::{parse_seeds, HarnessError, Result};
use dodagsim_core::analysis::compute_kpis;
use dodagsim_core::calibration::CalibrationConfig;
use dodagsim_core::engine::{
    correct_trace_energy, run_on, setup_topology, CtrlEnergyMode, SnapshotAccounting, TraceLevel,
};
use dodagsim_core::topology::hop_counts_masked;
use dodagsim_core::{LinkGraph, Protocol, SimConfig};

#[derive(Parser)]
#[command(name = "dodagsim", version, about = "Sink-rooted lossy network simulator with tabu-search parent selection")]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Scenario {
    #[arg(long)]
    protocol: Option<Protocol>,
    #[arg(long)]
    nodes: Option<usize>,
    /// Packets per second per node.
    #[arg(long)]
    rate: Option<f64>,
    /// Redeploy until the link graph is connected.
    #[arg(long)]
    redraw_until_connected: bool,
}

impl Scenario {
    fn apply(&self, sim: &mut SimConfig) {
        if let Some(p) = self.protocol {
            sim.protocol = p;
        }
        if let Some(n) = self.nodes {
            sim.nodes = n;
        }
        if let Some(r) = self.rate {
            sim.rate_pps = r;
        }
        if self.redraw_until_connected {
            sim.redraw_until_connected = true;
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TraceArg {
    Off,
    Control,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum CtrlArg {
    Inline,
    Deferred,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate one scenario.
    Run {
        #[command(flatten)]
        scenario: Scenario,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum)]
        trace: Option<TraceArg>,
        #[arg(long, value_enum)]
        ctrl_energy: Option<CtrlArg>,
        /// Output directory (must be new or empty).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the size x rate x protocol x seed matrix.
    Matrix {
        #[command(flatten)]
        scenario: Scenario,
        /// Seeds, e.g. `1..10` or `1,4,9`.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Calibrate the cost weights.
    Calibrate {
        #[command(flatten)]
        scenario: Scenario,
        #[arg(long)]
        seeds: Option<String>,
        /// 5 coarse + 5 fine candidates.
        #[arg(long)]
        smoke: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Drop one cost metric and compare against the full weight vector.
    Ablate {
        #[command(flatten)]
        scenario: Scenario,
        #[arg(long)]
        seeds: Option<String>,
        /// Metric to drop: e_r, e_t, d, h, etx, ls or none.
        #[arg(long)]
        drop: String,
        /// Re-calibrate the remaining weights instead of rescaling them.
        #[arg(long)]
        recalibrate: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply deferred snapshot control energy to a text trace.
    CorrectTrace {
        #[arg(long)]
        input: PathBuf,
        /// Corrected trace file.
        #[arg(long)]
        out: PathBuf,
        /// Edge list of the run's topology; otherwise it is rebuilt from the
        /// configuration and the trace header's seed.
        #[arg(long)]
        topology: Option<PathBuf>,
        #[arg(long)]
        redraw_until_connected: bool,
    },
    /// Topology import and export.
    Topo {
        #[command(subcommand)]
        cmd: TopoCmd,
    },
}

#[derive(Subcommand)]
enum TopoCmd {
    /// Write the link graph of a deployment as an edge list.
    Export {
        #[command(flatten)]
        scenario: Scenario,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Read an edge list and report its structure.
    Import {
        #[arg(long)]
        input: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn seeds_or(arg: &Option<String>, default: &[u64]) -> Result<Vec<u64>> {
    match arg {
        Some(s) => parse_seeds(s),
        None => Ok(default.to_vec()),
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let mut cfg = ExperimentConfig::load_or_default(cli.config.as_deref())?;
    let workers = cli.workers;
    match cli.cmd {
        Cmd::Run { scenario, seed, trace, ctrl_energy, out } => {
            scenario.apply(&mut cfg.sim);
            if let Some(t) = trace {
                cfg.sim.trace = match t {
                    TraceArg::Off => TraceLevel::Off,
                    TraceArg::Control => TraceLevel::Control,
                    TraceArg::Full => TraceLevel::Full,
                };
            }
            if let Some(c) = ctrl_energy {
                cfg.sim.ctrl_energy = match c {
                    CtrlArg::Inline => CtrlEnergyMode::Inline,
                    CtrlArg::Deferred => CtrlEnergyMode::Deferred,
                };
            }
            cmd_run(&cfg, seed, out.as_deref())
        }
        Cmd::Matrix { scenario, seeds, out } => {
            scenario.apply(&mut cfg.sim);
            if let Some(p) = scenario.protocol {
                cfg.matrix.protocols = vec![p];
            }
            if let Some(n) = scenario.nodes {
                cfg.matrix.sizes = vec![n];
            }
            if let Some(r) = scenario.rate {
                cfg.matrix.rates = vec![r];
            }
            cfg.matrix.seeds = seeds_or(&seeds, &cfg.matrix.seeds)?;
            let dir = prepare_out_dir(out.as_deref().or(cfg.matrix.output_dir.as_deref()), "matrix")?;
            fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
            let outcome = run_matrix(&cfg.sim, &cfg.matrix, workers)?;
            write_matrix(&outcome, &cfg.matrix, &cfg.analysis, &dir)?;
            println!("{} runs, {} failed -> {}", cfg.matrix.run_count(), outcome.failures.len(), dir.display());
            match outcome.failure_error() {
                Some(e) => Err(e),
                None => Ok(()),
            }
        }
        Cmd::Calibrate { scenario, seeds, smoke, out } => {
            scenario.apply(&mut cfg.sim);
            if let Some(n) = scenario.nodes {
                cfg.calibration.nodes = n;
            }
            if let Some(r) = scenario.rate {
                cfg.calibration.rate = r;
            }
            cfg.calibration.seeds = seeds_or(&seeds, &cfg.calibration.seeds)?;
            if smoke {
                let seed = cfg.calibration.search.seed;
                cfg.calibration.search = CalibrationConfig { seed, ..CalibrationConfig::smoke() };
            }
            let dir = prepare_out_dir(out.as_deref(), "calibrate")?;
            fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
            let report = run_calibration(&cfg.sim, &cfg.calibration, workers, Ok)?;
            write_calibration(&report, &dir)?;
            println!("chosen weights {:?} score {} -> {}", report.chosen.as_array(), report.chosen_score, dir.display());
            Ok(())
        }
        Cmd::Ablate { scenario, seeds, drop, recalibrate, out } => {
            scenario.apply(&mut cfg.sim);
            let drop = if drop.eq_ignore_ascii_case("none") { None } else { Some(metric_index(&drop)?) };
            let seeds = seeds_or(&seeds, &cfg.matrix.seeds)?;
            let spec = AblationSpec {
                nodes: cfg.sim.nodes,
                rate: cfg.sim.rate_pps,
                seeds: &seeds,
                drop,
                recalibrate: recalibrate.then_some(&cfg.calibration),
            };
            let dir = prepare_out_dir(out.as_deref(), "ablate")?;
            fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
            let report = run_ablation(&cfg.sim, &spec, &cfg.analysis, workers)?;
            write_ablation(&report, &dir)?;
            for d in &report.deltas {
                println!(
                    "{:<16} full {:>12.4} reduced {:>12.4} delta {:+.2}% [{:+.2}, {:+.2}]",
                    d.kpi.name(),
                    d.full_mean,
                    d.reduced_mean,
                    d.delta_pct,
                    d.ci_pct.lower,
                    d.ci_pct.upper
                );
            }
            Ok(())
        }
        Cmd::CorrectTrace { input, out, topology, redraw_until_connected } => {
            if redraw_until_connected {
                cfg.sim.redraw_until_connected = true;
            }
            cmd_correct_trace(&cfg.sim, &input, &out, topology.as_deref())
        }
        Cmd::Topo { cmd: TopoCmd::Export { scenario, seed, out } } => {
            scenario.apply(&mut cfg.sim);
            if out.exists() {
                return Err(HarnessError::Usage(format!("{} already exists", out.display())));
            }
            let (_, graph) = setup_topology(&cfg.sim, seed)?;
            fs::write(&out, graph.to_edge_list())?;
            println!("{} nodes, {} links -> {}", graph.node_count(), graph.links().len(), out.display());
            Ok(())
        }
        Cmd::Topo { cmd: TopoCmd::Import { input } } => {
            let text = fs::read_to_string(&input)?;
            let graph = LinkGraph::from_edge_list(&text).map_err(|e| HarnessError::Usage(e.to_string()))?;
            let hops = hop_counts_masked(&graph, graph.sink(), None);
            let orphans = hops.iter().filter(|h| h.is_none()).count();
            let max_hop = hops.iter().flatten().max().copied().unwrap_or(0);
            println!(
                "nodes {} links {} sink {} mean_degree {:.3} max_hop {} unreachable {}",
                graph.node_count(),
                graph.links().len(),
                graph.sink(),
                graph.mean_degree(),
                max_hop,
                orphans
            );
            if orphans > 0 {
                return Err(HarnessError::Connectivity(format!("{orphans} nodes cannot reach the sink")));
            }
            Ok(())
        }
    }
}

fn cmd_run(cfg: &ExperimentConfig, seed: u64, out: Option<&Path>) -> Result<()> {
    let sim = &cfg.sim;
    sim.validate().map_err(HarnessError::Usage)?;
    let (field, graph) = setup_topology(sim, seed)?;
    let trace = run_on(sim, &field, &graph, seed)?;
    let dir = prepare_out_dir(out, "run")?;
    fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
    fs::write(dir.join("topology.txt"), graph.to_edge_list())?;
    if sim.trace != TraceLevel::Off {
        fs::write(dir.join("trace.txt"), trace.to_text())?;
    }
    let header: Vec<String> = [
        "index",
        "t",
        "bytes",
        "mean_k",
        "parent_changes",
        "tabu_iterations",
        "last_improvement",
        "initial_cost",
        "cost",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let rows: Vec<Vec<String>> = trace
        .rounds
        .iter()
        .map(|r| {
            vec![
                r.index.to_string(),
                r.t.to_string(),
                r.bytes.to_string(),
                r.mean_k.to_string(),
                r.parent_changes.to_string(),
                r.tabu.map(|s| s.iterations.to_string()).unwrap_or_default(),
                r.tabu.map(|s| s.last_improvement.to_string()).unwrap_or_default(),
                fmt_opt(r.tabu.map(|s| s.initial_cost)),
                fmt_opt(r.tabu.map(|s| s.cost)),
            ]
        })
        .collect();
    write_table(&dir.join("rounds.csv"), &header, &rows)?;
    match compute_kpis(&trace, sim) {
        Ok(k) => {
            write_rows(&dir.join("kpis.csv"), &[ResultRow::new(sim.protocol, sim.nodes, sim.rate_pps, &k)])?;
            println!(
                "{} n={} rate={} seed={}: pdr {:.4} energy {:.3} J delay {} ms control {} B lsr {:.4} -> {}",
                sim.protocol,
                sim.nodes,
                sim.rate_pps,
                seed,
                k.pdr,
                k.energy_total_j,
                fmt_opt(k.e2e_delay_ms),
                k.control_bytes,
                k.lsr,
                dir.display()
            );
        }
        Err(e) => println!("no KPIs ({e}) -> {}", dir.display()),
    }
    Ok(())
}

fn header_value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    let header = text.lines().next()?.strip_prefix('#')?;
    header.split_whitespace().find_map(|kv| kv.strip_prefix(key)?.strip_prefix('='))
}

fn cmd_correct_trace(base: &SimConfig, input: &Path, out: &Path, topology: Option<&Path>) -> Result<()> {
    check_not_input(out, &[input])?;
    if out.exists() {
        return Err(HarnessError::Usage(format!("{} already exists", out.display())));
    }
    let text = fs::read_to_string(input)?;
    let bad = |k: &str| HarnessError::Usage(format!("trace header lacks a valid `{k}=`"));
    let mut sim = base.clone();
    sim.nodes = header_value(&text, "nodes").and_then(|v| v.parse().ok()).ok_or_else(|| bad("nodes"))?;
    sim.snapshot_period_s = header_value(&text, "period").and_then(|v| v.parse().ok()).ok_or_else(|| bad("period"))?;
    let graph = match topology {
        Some(p) => LinkGraph::from_edge_list(&fs::read_to_string(p)?).map_err(|e| HarnessError::Usage(e.to_string()))?,
        None => {
            let seed: u64 = header_value(&text, "seed").and_then(|v| v.parse().ok()).ok_or_else(|| bad("seed"))?;
            setup_topology(&sim, seed)?.1
        }
    };
    let acct = SnapshotAccounting::from_graph(&graph, sim.control, sim.snapshot_period_s, &sim.energy);
    let fixed = correct_trace_energy(&text, &acct).map_err(|e| HarnessError::Usage(e.to_string()))?;
    fs::write(out, fixed)?;
    Ok(())
}
