//! Metric ablation: drop one weight, rerun, compare KPIs.

use std::path::Path;

use dodagsim_core::analysis::{ablation_deltas, AblationDelta, Kpi, KpiRecord};
use dodagsim_core::cost::FEATURE_NAMES;
use dodagsim_core::{Protocol, SimConfig, WeightVector};
use rayon::prelude::*;

use crate::calibrate::run_calibration;
use crate::config::{AnalysisSettings, CalibrationSettings};
use crate::matrix::{run_job, Job, JobError};
use crate::output::write_table;
use crate::{with_workers, HarnessError, Result};

/// Index of a cost metric by name (`e_r`, `e_t`, `d`, `h`, `etx`, `ls`).
pub fn metric_index(name: &str) -> Result<usize> {
    let n = name.to_ascii_lowercase().replace('-', "_");
    let alias = match n.as_str() {
        "er" | "energy" => "e_r",
        "et" => "e_t",
        other => other,
    };
    FEATURE_NAMES
        .iter()
        .position(|f| *f == alias)
        .ok_or_else(|| HarnessError::Usage(format!("unknown metric `{name}` (expected one of {FEATURE_NAMES:?})")))
}

pub const ABLATION_KPIS: [Kpi; 5] = [Kpi::Pdr, Kpi::EnergyTotal, Kpi::Delay, Kpi::ControlBytes, Kpi::Lsr];

#[derive(Debug, Clone)]
pub struct AblationReport {
    pub dropped: Option<usize>,
    pub full_weights: WeightVector,
    pub reduced_weights: WeightVector,
    pub full: Vec<KpiRecord>,
    pub reduced: Vec<KpiRecord>,
    pub deltas: Vec<AblationDelta>,
}

#[derive(Debug, Clone)]
pub struct AblationSpec<'a> {
    pub nodes: usize,
    pub rate: f64,
    pub seeds: &'a [u64],
    pub drop: Option<usize>,
    /// Re-calibrate the remaining five weights instead of rescaling them.
    pub recalibrate: Option<&'a CalibrationSettings>,
}

fn run_seeds(base: &SimConfig, weights: WeightVector, nodes: usize, rate: f64, seeds: &[u64]) -> Result<Vec<KpiRecord>> {
    let cfg = SimConfig { weights, ..base.clone() };
    seeds
        .par_iter()
        .map(|&seed| {
            run_job(&cfg, &Job { protocol: Protocol::Taburpl, nodes, rate, seed }).map_err(|e| match e {
                JobError::Sim(e) => HarnessError::from(e),
                JobError::Analysis(e) => HarnessError::from(e),
            })
        })
        .collect()
}

/// Runs TABURPL with the configured weights and with metric `drop` removed,
/// on the same seeds, and reports paired KPI deltas.
pub fn run_ablation(
    base: &SimConfig,
    spec: &AblationSpec<'_>,
    settings: &AnalysisSettings,
    workers: usize,
) -> Result<AblationReport> {
    let full_weights = base.weights;
    let reduced_weights = match (spec.drop, spec.recalibrate) {
        (None, _) => full_weights,
        (Some(i), None) => full_weights.without(i).map_err(|e| HarnessError::Usage(e.to_string()))?,
        (Some(i), Some(cal)) => {
            let project = |w: WeightVector| w.without(i).map_err(|e| HarnessError::Simulation(e.to_string()));
            run_calibration(base, cal, workers, project)?.chosen
        }
    };
    let (full, reduced) = with_workers(workers, || -> Result<_> {
        let full = run_seeds(base, full_weights, spec.nodes, spec.rate, spec.seeds)?;
        let reduced = if reduced_weights == full_weights {
            full.clone()
        } else {
            run_seeds(base, reduced_weights, spec.nodes, spec.rate, spec.seeds)?
        };
        Ok((full, reduced))
    })??;
    let deltas = ablation_deltas(&full, &reduced, &ABLATION_KPIS, settings.resamples, settings.ci_seed)?;
    Ok(AblationReport { dropped: spec.drop, full_weights, reduced_weights, full, reduced, deltas })
}

/// `ablation.csv`: one row per KPI.
pub fn write_ablation(report: &AblationReport, dir: &Path) -> Result<()> {
    let header: Vec<String> =
        ["dropped", "kpi", "full_mean", "reduced_mean", "delta_pct", "ci_lower_pct", "ci_upper_pct", "reduced_weights"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    let dropped = report.dropped.map(|i| FEATURE_NAMES[i]).unwrap_or("none");
    let w = report.reduced_weights.as_array().iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let rows: Vec<Vec<String>> = report
        .deltas
        .iter()
        .map(|d| {
            vec![
                dropped.to_string(),
                d.kpi.name().to_string(),
                d.full_mean.to_string(),
                d.reduced_mean.to_string(),
                d.delta_pct.to_string(),
                d.ci_pct.lower.to_string(),
                d.ci_pct.upper.to_string(),
                w.clone(),
            ]
        })
        .collect();
    write_table(&dir.join("ablation.csv"), &header, &rows)
}
