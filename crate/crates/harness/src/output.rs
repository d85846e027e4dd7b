//! Output directories and CSV writers.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use dodagsim_core::analysis::{CiEstimate, KpiRecord};
use dodagsim_core::Protocol;
use serde::Serialize;

use crate::{HarnessError, Result};

/// Creates the output directory. A user-named directory must be new or
/// empty; otherwise a timestamped one is made under `runs/`.
pub fn prepare_out_dir(out: Option<&Path>, prefix: &str) -> Result<PathBuf> {
    match out {
        Some(p) => {
            if p.exists() {
                if !p.is_dir() {
                    return Err(HarnessError::Usage(format!("{} exists and is not a directory", p.display())));
                }
                if fs::read_dir(p)?.next().is_some() {
                    return Err(HarnessError::Usage(format!("{} is not empty; pick a fresh directory", p.display())));
                }
            }
            fs::create_dir_all(p)?;
            Ok(p.to_path_buf())
        }
        None => {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            let base = PathBuf::from("runs");
            let mut dir = base.join(format!("{prefix}-{secs}"));
            let mut k = 1;
            while dir.exists() {
                dir = base.join(format!("{prefix}-{secs}-{k}"));
                k += 1;
            }
            fs::create_dir_all(&dir)?;
            Ok(dir)
        }
    }
}

/// Refuses to write over an input file.
pub fn check_not_input(out: &Path, inputs: &[&Path]) -> Result<()> {
    let canon = |p: &Path| fs::canonicalize(p).ok();
    let o = canon(out);
    for i in inputs {
        if o.is_some() && o == canon(i) {
            return Err(HarnessError::Usage(format!("refusing to overwrite input {}", i.display())));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub protocol: Protocol,
    pub nodes: usize,
    pub rate: f64,
    pub seed: u64,
    pub sent: u64,
    pub received: u64,
    pub pdr: f64,
    pub plr_pct: f64,
    pub energy_total_j: f64,
    pub energy_mean_j: f64,
    pub avg_path_length: Option<f64>,
    pub control_messages: u64,
    pub control_bytes: u64,
    pub control_bytes_per_min: f64,
    pub e2e_delay_ms: Option<f64>,
    pub per_hop_delay_ms: Option<f64>,
    pub throughput_bps: f64,
    pub lsr: f64,
    pub lsr_link_weighted: Option<f64>,
}

impl ResultRow {
    pub fn new(protocol: Protocol, nodes: usize, rate: f64, k: &KpiRecord) -> Self {
        ResultRow {
            protocol,
            nodes,
            rate,
            seed: k.seed,
            sent: k.sent,
            received: k.received,
            pdr: k.pdr,
            plr_pct: k.plr,
            energy_total_j: k.energy_total_j,
            energy_mean_j: k.energy_mean_j,
            avg_path_length: k.avg_path_length,
            control_messages: k.control_messages,
            control_bytes: k.control_bytes,
            control_bytes_per_min: k.control_bytes_per_min,
            e2e_delay_ms: k.e2e_delay_ms,
            per_hop_delay_ms: k.per_hop_delay_ms,
            throughput_bps: k.throughput_bps,
            lsr: k.lsr,
            lsr_link_weighted: k.lsr_link_weighted,
        }
    }
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a header and pre-formatted records.
pub fn write_table(path: &Path, header: &[String], records: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in records {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn ci_cells(ci: Option<&CiEstimate>) -> [String; 3] {
    match ci {
        Some(c) => [c.mean.to_string(), c.lower.to_string(), c.upper.to_string()],
        None => Default::default(),
    }
}
