//! The size x load x protocol x seed experiment matrix.

use std::fs;
use std::path::Path;

use dodagsim_core::analysis::{bootstrap_ci, compute_kpis, CiEstimate, Kpi, KpiRecord};
use dodagsim_core::engine::{run, SimError};
use dodagsim_core::{Protocol, SimConfig};
use rayon::prelude::*;

use crate::config::{AnalysisSettings, ExperimentMatrix};
use crate::output::{ci_cells, write_rows, write_table, ResultRow};
use crate::{with_workers, HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub protocol: Protocol,
    pub nodes: usize,
    pub rate: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CellFailure {
    pub protocol: Protocol,
    pub nodes: usize,
    pub rate: f64,
    pub seed: u64,
    pub connectivity: bool,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct MatrixOutcome {
    pub rows: Vec<ResultRow>,
    pub records: Vec<(Job, KpiRecord)>,
    pub failures: Vec<CellFailure>,
}

impl MatrixOutcome {
    /// Records of one cell, in seed order of the matrix.
    pub fn cell(&self, protocol: Protocol, nodes: usize, rate: f64) -> Vec<KpiRecord> {
        self.records
            .iter()
            .filter(|(j, _)| j.protocol == protocol && j.nodes == nodes && j.rate == rate)
            .map(|(_, r)| r.clone())
            .collect()
    }

    /// The error the process should exit with, if any cell failed.
    pub fn failure_error(&self) -> Option<HarnessError> {
        if self.failures.is_empty() {
            return None;
        }
        let msg = format!("{} of {} runs failed", self.failures.len(), self.failures.len() + self.rows.len());
        if self.failures.iter().all(|f| f.connectivity) {
            Some(HarnessError::Connectivity(msg))
        } else {
            Some(HarnessError::Simulation(msg))
        }
    }
}

/// Jobs in output order: size, rate, protocol, seed.
pub fn jobs(m: &ExperimentMatrix) -> Vec<Job> {
    let mut out = Vec::with_capacity(m.run_count());
    for &nodes in &m.sizes {
        for &rate in &m.rates {
            for &protocol in &m.protocols {
                for &seed in &m.seeds {
                    out.push(Job { protocol, nodes, rate, seed });
                }
            }
        }
    }
    out
}

pub fn scenario(base: &SimConfig, job: &Job) -> SimConfig {
    SimConfig { nodes: job.nodes, rate_pps: job.rate, protocol: job.protocol, ..base.clone() }
}

#[derive(Debug)]
pub enum JobError {
    Sim(SimError),
    Analysis(dodagsim_core::analysis::AnalysisError),
}

pub fn run_job(base: &SimConfig, job: &Job) -> std::result::Result<KpiRecord, JobError> {
    let cfg = scenario(base, job);
    let trace = run(&cfg, job.seed).map_err(JobError::Sim)?;
    compute_kpis(&trace, &cfg).map_err(JobError::Analysis)
}

/// Simulates every job on up to `workers` threads. Failures are collected,
/// not skipped.
pub fn run_matrix(base: &SimConfig, matrix: &ExperimentMatrix, workers: usize) -> Result<MatrixOutcome> {
    matrix.validate()?;
    base.validate().map_err(HarnessError::Usage)?;
    let jobs = jobs(matrix);
    let results: Vec<_> = with_workers(workers, || jobs.par_iter().map(|j| (*j, run_job(base, j))).collect())?;
    let mut out = MatrixOutcome { rows: Vec::new(), records: Vec::new(), failures: Vec::new() };
    for (job, r) in results {
        match r {
            Ok(k) => {
                out.rows.push(ResultRow::new(job.protocol, job.nodes, job.rate, &k));
                out.records.push((job, k));
            }
            Err(e) => {
                let (connectivity, error) = match e {
                    JobError::Sim(e) => (e.is_connectivity(), e.to_string()),
                    JobError::Analysis(e) => (false, e.to_string()),
                };
                out.failures.push(CellFailure {
                    protocol: job.protocol,
                    nodes: job.nodes,
                    rate: job.rate,
                    seed: job.seed,
                    connectivity,
                    error,
                });
            }
        }
    }
    Ok(out)
}

/// Mean and CI of a KPI over runs. With a single defined value only the
/// mean is known.
pub fn kpi_estimate(records: &[KpiRecord], kpi: Kpi, settings: &AnalysisSettings, seed: u64) -> Option<CiEstimate> {
    let xs: Vec<f64> = records.iter().filter_map(|r| kpi.value(r)).collect();
    match xs.len() {
        0 => None,
        1 => Some(CiEstimate { mean: xs[0], lower: f64::NAN, upper: f64::NAN, level: settings.level, resamples: 0 }),
        _ => bootstrap_ci(&xs, settings.resamples, settings.level, seed).ok(),
    }
}

fn estimate_cells(e: Option<&CiEstimate>) -> [String; 3] {
    match e {
        Some(c) if c.resamples == 0 => [c.mean.to_string(), String::new(), String::new()],
        other => ci_cells(other),
    }
}

type Table = (Vec<String>, Vec<Vec<String>>);

/// One row per (size, rate, protocol) with mean, lower and upper for every KPI.
pub fn summary_table(outcome: &MatrixOutcome, matrix: &ExperimentMatrix, settings: &AnalysisSettings) -> Table {
    let mut header: Vec<String> = ["protocol", "nodes", "rate", "runs"].iter().map(|s| s.to_string()).collect();
    for k in Kpi::ALL {
        for s in ["mean", "lower", "upper"] {
            header.push(format!("{}_{s}", k.name()));
        }
    }
    let mut rows = Vec::new();
    let mut cell_idx = 0u64;
    for &nodes in &matrix.sizes {
        for &rate in &matrix.rates {
            for &p in &matrix.protocols {
                let recs = outcome.cell(p, nodes, rate);
                let seed = settings.ci_seed.wrapping_add(cell_idx);
                cell_idx += 1;
                if recs.is_empty() {
                    continue;
                }
                let mut row = vec![p.to_string(), nodes.to_string(), format!("{rate:?}"), recs.len().to_string()];
                for k in Kpi::ALL {
                    row.extend(estimate_cells(kpi_estimate(&recs, k, settings, seed).as_ref()));
                }
                rows.push(row);
            }
        }
    }
    (header, rows)
}

/// Per (KPI, size): x = traffic rate, one mean/lower/upper triple per protocol.
pub fn plot_tables(
    outcome: &MatrixOutcome,
    matrix: &ExperimentMatrix,
    settings: &AnalysisSettings,
) -> Vec<(String, Vec<String>, Vec<Vec<String>>)> {
    let mut out = Vec::new();
    for &nodes in &matrix.sizes {
        for (ki, k) in Kpi::ALL.iter().enumerate() {
            let mut header = vec!["rate".to_string()];
            for p in &matrix.protocols {
                for s in ["mean", "lower", "upper"] {
                    header.push(format!("{p}_{s}"));
                }
            }
            let mut rows = Vec::new();
            for &rate in &matrix.rates {
                let mut row = vec![format!("{rate:?}")];
                for (pi, &p) in matrix.protocols.iter().enumerate() {
                    let recs = outcome.cell(p, nodes, rate);
                    let seed = settings.ci_seed.wrapping_add((ki * 1000 + pi) as u64);
                    row.extend(estimate_cells(kpi_estimate(&recs, *k, settings, seed).as_ref()));
                }
                rows.push(row);
            }
            out.push((format!("{}_n{nodes}.csv", k.name()), header, rows));
        }
    }
    out
}

/// Writes `results.csv`, `summary.csv`, `failures.csv` (if any) and `plot/*.csv`.
pub fn write_matrix(outcome: &MatrixOutcome, matrix: &ExperimentMatrix, settings: &AnalysisSettings, dir: &Path) -> Result<()> {
    write_rows(&dir.join("results.csv"), &outcome.rows)?;
    let (h, rows) = summary_table(outcome, matrix, settings);
    write_table(&dir.join("summary.csv"), &h, &rows)?;
    if !outcome.failures.is_empty() {
        write_rows(&dir.join("failures.csv"), &outcome.failures)?;
    }
    let plot = dir.join("plot");
    fs::create_dir_all(&plot)?;
    for (name, h, rows) in plot_tables(outcome, matrix, settings) {
        write_table(&plot.join(name), &h, &rows)?;
    }
    Ok(())
}
