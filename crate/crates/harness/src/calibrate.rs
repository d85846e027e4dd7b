//! Weight calibration driven by full simulations.

use std::fs;
use std::path::Path;

use dodagsim_core::analysis::compute_kpis;
use dodagsim_core::calibration::{calibrate, CalibrationReport, ObjectivePoint};
use dodagsim_core::engine::run;
use dodagsim_core::{Protocol, SimConfig, WeightVector};
use rayon::prelude::*;

use crate::config::CalibrationSettings;
use crate::{with_workers, HarnessError, Result};

/// Mean PDR and mean total energy of TABURPL under each weight vector,
/// averaged over `seeds`. Must be called inside a rayon pool.
pub fn evaluate_weights(
    base: &SimConfig,
    nodes: usize,
    rate: f64,
    seeds: &[u64],
    weights: &[WeightVector],
) -> Result<Vec<ObjectivePoint>> {
    if seeds.is_empty() {
        return Err(HarnessError::Usage("calibration needs at least one seed".into()));
    }
    let jobs: Vec<(usize, u64)> = (0..weights.len()).flat_map(|i| seeds.iter().map(move |&s| (i, s))).collect();
    let results: Vec<Result<(f64, f64)>> = jobs
        .par_iter()
        .map(|&(i, seed)| {
            let cfg = SimConfig { nodes, rate_pps: rate, protocol: Protocol::Taburpl, weights: weights[i], ..base.clone() };
            let trace = run(&cfg, seed)?;
            let k = compute_kpis(&trace, &cfg)?;
            Ok((k.pdr, k.energy_total_j))
        })
        .collect();
    let mut sums = vec![(0.0, 0.0); weights.len()];
    for ((i, _), r) in jobs.iter().zip(results) {
        let (p, e) = r?;
        sums[*i].0 += p;
        sums[*i].1 += e;
    }
    let n = seeds.len() as f64;
    Ok(sums.into_iter().map(|(p, e)| ObjectivePoint::new(p / n, e / n)).collect())
}

/// Two-stage calibration. `project` maps every candidate before it is
/// simulated (identity for a plain run; used by ablations to pin a weight at 0).
pub fn run_calibration(
    base: &SimConfig,
    settings: &CalibrationSettings,
    workers: usize,
    project: impl Fn(WeightVector) -> Result<WeightVector> + Sync,
) -> Result<CalibrationReport> {
    with_workers(workers, || {
        let mut report = calibrate::<HarnessError>(&settings.search, |batch| {
            let mapped = batch.iter().map(|w| project(*w)).collect::<Result<Vec<_>>>()?;
            evaluate_weights(base, settings.nodes, settings.rate, &settings.seeds, &mapped)
        })?;
        for r in &mut report.rows {
            r.weights = project(r.weights)?;
        }
        report.base = project(report.base)?;
        report.chosen = project(report.chosen)?;
        Ok(report)
    })?
}

/// `report.csv` plus `weights.toml` holding the chosen vector.
pub fn write_calibration(report: &CalibrationReport, dir: &Path) -> Result<()> {
    fs::write(dir.join("report.csv"), report.to_csv())?;
    let w = report.chosen.as_array();
    let text = format!(
        "# score {} (stage-1 base {})\n[sim]\nweights = [{}]\n",
        report.chosen_score,
        report.base_score,
        w.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
    );
    fs::write(dir.join("weights.toml"), text)?;
    Ok(())
}
