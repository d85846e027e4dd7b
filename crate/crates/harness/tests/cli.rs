use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dodagsim"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const SMALL: &str = "[sim]\nnodes = 12\nduration_s = 100.0\nrate_pps = 1.0\nredraw_until_connected = true\n\
                     [sim.area]\nwidth = 400.0\nheight = 400.0\n[analysis]\nresamples = 200\n";

#[test]
fn usage_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_in(tmp.path(), &["frobnicate"])), 1);
    assert_eq!(code(&run_in(tmp.path(), &["run", "--protocol", "RPL-X"])), 1);
    assert_eq!(code(&run_in(tmp.path(), &["ablate", "--drop", "q"])), 1);
    assert_eq!(code(&run_in(tmp.path(), &["run", "--config", "missing.toml"])), 1);
    assert_eq!(code(&run_in(tmp.path(), &["--help"])), 0);
}

#[test]
fn disconnected_run_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("far.toml"), "[sim.area]\nwidth = 50000.0\nheight = 50000.0\n").unwrap();
    let o = run_in(tmp.path(), &["--config", "far.toml", "run", "--nodes", "8", "--out", "r"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn run_writes_outputs_and_refuses_non_empty_dir() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.toml"), SMALL).unwrap();
    let o = run_in(tmp.path(), &["--config", "c.toml", "run", "--seed", "4", "--trace", "full", "--out", "r"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["kpis.csv", "rounds.csv", "trace.txt", "topology.txt", "config.toml"] {
        assert!(tmp.path().join("r").join(f).exists(), "{f}");
    }
    let o = run_in(tmp.path(), &["--config", "c.toml", "run", "--out", "r"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn matrix_subcommand() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.toml"), SMALL).unwrap();
    let args = ["--config", "c.toml", "matrix", "--nodes", "12", "--rate", "1", "--seeds", "1..2", "--workers", "2"];
    let o = run_in(tmp.path(), &[&args[..], &["--out", "a"]].concat());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = run_in(tmp.path(), &[&args[..], &["--out", "b"]].concat());
    assert_eq!(code(&o), 0);
    let rows = fs::read_to_string(tmp.path().join("a/results.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 4 * 2);
    for f in ["results.csv", "summary.csv"] {
        assert_eq!(fs::read(tmp.path().join("a").join(f)).unwrap(), fs::read(tmp.path().join("b").join(f)).unwrap());
    }
}

#[test]
fn deferred_trace_correction_matches_inline() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.toml"), SMALL).unwrap();
    let common = ["--config", "c.toml", "run", "--seed", "6", "--protocol", "OF0", "--trace", "control"];
    let o = run_in(tmp.path(), &[&common[..], &["--ctrl-energy", "inline", "--out", "i"]].concat());
    assert_eq!(code(&o), 0);
    let o = run_in(tmp.path(), &[&common[..], &["--ctrl-energy", "deferred", "--out", "d"]].concat());
    assert_eq!(code(&o), 0);
    let o = run_in(tmp.path(), &["--config", "c.toml", "correct-trace", "--input", "d/trace.txt", "--out", "fixed.txt"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = run_in(
        tmp.path(),
        &["correct-trace", "--input", "d/trace.txt", "--topology", "d/topology.txt", "--out", "fixed2.txt"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let read = |f: &str| fs::read_to_string(tmp.path().join(f)).unwrap();
    let inline = dodagsim_core::engine::parse_energy_samples(&read("i/trace.txt")).unwrap();
    for f in ["fixed.txt", "fixed2.txt"] {
        let fixed = dodagsim_core::engine::parse_energy_samples(&read(f)).unwrap();
        assert_eq!(inline.len(), fixed.len());
        for (a, b) in inline.iter().zip(&fixed) {
            assert_eq!((a.t, a.node), (b.t, b.node));
            assert!((a.res - b.res).abs() < 1e-9);
        }
    }
    // The input trace is left untouched and the output may not overwrite it.
    assert!(read("d/trace.txt").lines().next().unwrap().contains("ctrl_energy=deferred"));
    let o = run_in(tmp.path(), &["correct-trace", "--input", "d/trace.txt", "--out", "d/trace.txt"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn topology_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.toml"), SMALL).unwrap();
    let o = run_in(tmp.path(), &["--config", "c.toml", "topo", "export", "--seed", "2", "--out", "e.txt"]);
    assert_eq!(code(&o), 0);
    let o = run_in(tmp.path(), &["topo", "import", "--input", "e.txt"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("nodes 12"));
    fs::write(tmp.path().join("cut.txt"), "# nodes=3 sink=0 seed=1\n0 1 10 0.9\n1 0 10 0.9\n").unwrap();
    let o = run_in(tmp.path(), &["topo", "import", "--input", "cut.txt"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn calibrate_and_ablate_subcommands() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.toml"), SMALL).unwrap();
    let o = run_in(
        tmp.path(),
        &["--config", "c.toml", "calibrate", "--smoke", "--nodes", "12", "--rate", "1", "--seeds", "1", "--out", "cal"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(tmp.path().join("cal/weights.toml").exists());
    let o = run_in(tmp.path(), &["--config", "c.toml", "ablate", "--drop", "d", "--seeds", "1..3", "--out", "ab"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(tmp.path().join("ab/ablation.csv")).unwrap().lines().count(), 6);
}
