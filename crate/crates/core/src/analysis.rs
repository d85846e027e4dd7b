//! KPI extraction and the statistics used to compare runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{SimConfig, TraceLog};
use crate::topology::{pearson_correlation, TopologyError};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("no packets were sent; delivery ratios are undefined")]
    NoPacketsSent,
    #[error("need at least 2 samples, got {0}")]
    InsufficientData(usize),
    #[error("seed lists differ: {0}")]
    Pairing(String),
    #[error(transparent)]
    Correlation(#[from] TopologyError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub const DEFAULT_RESAMPLES: usize = 10_000;
pub const DEFAULT_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiRecord {
    pub seed: u64,
    pub sent: u64,
    pub received: u64,
    pub pdr: f64,
    /// Percent.
    pub plr: f64,
    pub energy_total_j: f64,
    pub energy_mean_j: f64,
    pub avg_path_length: Option<f64>,
    pub control_messages: u64,
    pub control_bytes: u64,
    pub control_bytes_per_min: f64,
    pub e2e_delay_ms: Option<f64>,
    pub per_hop_delay_ms: Option<f64>,
    pub throughput_bps: f64,
    /// Acknowledged attempts over all attempts.
    pub lsr: f64,
    /// Mean of per-link success ratios over links that carried traffic.
    pub lsr_link_weighted: Option<f64>,
}

/// KPIs of one run. Energy covers non-sink nodes only.
pub fn compute_kpis(trace: &TraceLog, config: &SimConfig) -> Result<KpiRecord, AnalysisError> {
    let c = &trace.counters;
    if c.sent == 0 {
        return Err(AnalysisError::NoPacketsSent);
    }
    let pdr = c.received as f64 / c.sent as f64;
    let consumed = trace.energy_consumed();
    let energy_total: f64 = consumed.iter().sum();
    let per_node = if consumed.is_empty() { 0.0 } else { energy_total / consumed.len() as f64 };
    let received = (c.received > 0).then_some(c.received as f64);
    let used: Vec<_> = trace.links.iter().filter(|l| l.attempts > 0).collect();
    Ok(KpiRecord {
        seed: trace.header.seed,
        sent: c.sent,
        received: c.received,
        pdr,
        plr: (1.0 - pdr) * 100.0,
        energy_total_j: energy_total,
        energy_mean_j: per_node,
        avg_path_length: received.map(|r| c.hop_sum as f64 / r),
        control_messages: c.ctrl_messages,
        control_bytes: c.ctrl_bytes,
        control_bytes_per_min: c.ctrl_bytes as f64 / (config.duration_s / 60.0),
        e2e_delay_ms: received.map(|r| c.delay_sum_s / r * 1e3),
        per_hop_delay_ms: (c.per_hop_samples > 0).then(|| c.per_hop_delay_sum_s / c.per_hop_samples as f64 * 1e3),
        throughput_bps: c.delivered_payload_bits as f64 / config.duration_s,
        lsr: if c.tx_attempts > 0 { c.tx_acks as f64 / c.tx_attempts as f64 } else { 0.0 },
        lsr_link_weighted: (!used.is_empty())
            .then(|| used.iter().map(|l| l.acks as f64 / l.attempts as f64).sum::<f64>() / used.len() as f64),
    })
}

/// KPIs selectable by name in summaries and ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kpi {
    Pdr,
    Plr,
    EnergyTotal,
    EnergyMean,
    PathLength,
    ControlBytes,
    ControlBytesPerMin,
    Delay,
    PerHopDelay,
    Throughput,
    Lsr,
}

impl Kpi {
    pub const ALL: [Kpi; 11] = [
        Kpi::Pdr,
        Kpi::Plr,
        Kpi::EnergyTotal,
        Kpi::EnergyMean,
        Kpi::PathLength,
        Kpi::ControlBytes,
        Kpi::ControlBytesPerMin,
        Kpi::Delay,
        Kpi::PerHopDelay,
        Kpi::Throughput,
        Kpi::Lsr,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Kpi::Pdr => "pdr",
            Kpi::Plr => "plr_pct",
            Kpi::EnergyTotal => "energy_total_j",
            Kpi::EnergyMean => "energy_mean_j",
            Kpi::PathLength => "avg_path_length",
            Kpi::ControlBytes => "control_bytes",
            Kpi::ControlBytesPerMin => "control_bytes_per_min",
            Kpi::Delay => "e2e_delay_ms",
            Kpi::PerHopDelay => "per_hop_delay_ms",
            Kpi::Throughput => "throughput_bps",
            Kpi::Lsr => "lsr",
        }
    }

    pub fn value(&self, r: &KpiRecord) -> Option<f64> {
        match self {
            Kpi::Pdr => Some(r.pdr),
            Kpi::Plr => Some(r.plr),
            Kpi::EnergyTotal => Some(r.energy_total_j),
            Kpi::EnergyMean => Some(r.energy_mean_j),
            Kpi::PathLength => r.avg_path_length,
            Kpi::ControlBytes => Some(r.control_bytes as f64),
            Kpi::ControlBytesPerMin => Some(r.control_bytes_per_min),
            Kpi::Delay => r.e2e_delay_ms,
            Kpi::PerHopDelay => r.per_hop_delay_ms,
            Kpi::Throughput => Some(r.throughput_bps),
            Kpi::Lsr => Some(r.lsr),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiEstimate {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub resamples: usize,
}

impl CiEstimate {
    pub fn overlaps(&self, other: &CiEstimate) -> bool {
        self.lower <= other.upper && other.lower <= self.upper
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Linear interpolation between closest ranks of a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Percentile bootstrap interval for the mean.
pub fn bootstrap_ci(samples: &[f64], resamples: usize, level: f64, seed: u64) -> Result<CiEstimate, AnalysisError> {
    if samples.len() < 2 {
        return Err(AnalysisError::InsufficientData(samples.len()));
    }
    if resamples == 0 || !(level > 0.0 && level < 1.0) {
        return Err(AnalysisError::InvalidArgument("need resamples > 0 and level in (0, 1)".into()));
    }
    let n = samples.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| samples[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let m = mean(samples);
    let alpha = 1.0 - level;
    Ok(CiEstimate {
        mean: m,
        lower: quantile(&means, alpha / 2.0).min(m),
        upper: quantile(&means, 1.0 - alpha / 2.0).max(m),
        level,
        resamples,
    })
}

/// Mean and CI of one KPI over a set of runs. Runs where the KPI is
/// undefined are skipped.
pub fn summarize(records: &[KpiRecord], kpi: Kpi, resamples: usize, seed: u64) -> Result<CiEstimate, AnalysisError> {
    let xs: Vec<f64> = records.iter().filter_map(|r| kpi.value(r)).collect();
    bootstrap_ci(&xs, resamples, DEFAULT_LEVEL, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationDelta {
    pub kpi: Kpi,
    pub full_mean: f64,
    pub reduced_mean: f64,
    /// `(reduced - full) / full * 100`.
    pub delta_pct: f64,
    /// CI of the mean paired difference, in percent of the full mean.
    pub ci_pct: CiEstimate,
}

/// Percent change of each KPI mean from `full` to `reduced`, paired by seed.
pub fn ablation_deltas(
    full: &[KpiRecord],
    reduced: &[KpiRecord],
    kpis: &[Kpi],
    resamples: usize,
    seed: u64,
) -> Result<Vec<AblationDelta>, AnalysisError> {
    let mut f: Vec<&KpiRecord> = full.iter().collect();
    let mut r: Vec<&KpiRecord> = reduced.iter().collect();
    f.sort_by_key(|x| x.seed);
    r.sort_by_key(|x| x.seed);
    let fs: Vec<u64> = f.iter().map(|x| x.seed).collect();
    let rs: Vec<u64> = r.iter().map(|x| x.seed).collect();
    if fs != rs {
        return Err(AnalysisError::Pairing(format!("{fs:?} vs {rs:?}")));
    }
    let mut out = Vec::new();
    for &kpi in kpis {
        let pairs: Vec<(f64, f64)> =
            f.iter().zip(&r).filter_map(|(a, b)| Some((kpi.value(a)?, kpi.value(b)?))).collect();
        if pairs.len() < 2 {
            return Err(AnalysisError::InsufficientData(pairs.len()));
        }
        let full_mean = mean(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
        let reduced_mean = mean(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
        let scale = if full_mean != 0.0 { 100.0 / full_mean } else { 0.0 };
        let diffs: Vec<f64> = pairs.iter().map(|(a, b)| b - a).collect();
        let ci = bootstrap_ci(&diffs, resamples, DEFAULT_LEVEL, seed)?;
        let (lo, hi) = if scale >= 0.0 { (ci.lower * scale, ci.upper * scale) } else { (ci.upper * scale, ci.lower * scale) };
        out.push(AblationDelta {
            kpi,
            full_mean,
            reduced_mean,
            delta_pct: (reduced_mean - full_mean) * scale,
            ci_pct: CiEstimate { mean: ci.mean * scale, lower: lo, upper: hi, ..ci },
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub rho: f64,
    pub ci: CiEstimate,
    pub samples: usize,
}

/// Pooled Pearson coefficient of (x, y) samples with a pair-bootstrap CI.
pub fn correlation_study(samples: &[(f64, f64)], resamples: usize, seed: u64) -> Result<CorrelationResult, AnalysisError> {
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let rho = pearson_correlation(&xs, &ys)?;
    let n = samples.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rs = Vec::with_capacity(resamples);
    let (mut bx, mut by) = (vec![0.0; n], vec![0.0; n]);
    for _ in 0..resamples {
        for i in 0..n {
            let j = rng.random_range(0..n);
            bx[i] = xs[j];
            by[i] = ys[j];
        }
        if let Ok(r) = pearson_correlation(&bx, &by) {
            rs.push(r);
        }
    }
    if rs.is_empty() {
        return Err(AnalysisError::InsufficientData(n));
    }
    rs.sort_by(f64::total_cmp);
    let a = 1.0 - DEFAULT_LEVEL;
    let ci = CiEstimate {
        mean: rho,
        lower: quantile(&rs, a / 2.0).min(rho),
        upper: quantile(&rs, 1.0 - a / 2.0).max(rho),
        level: DEFAULT_LEVEL,
        resamples,
    };
    Ok(CorrelationResult { rho, ci, samples: n })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bootstrap_constant() {
        let ci = bootstrap_ci(&[5.0; 4], 1000, 0.95, 1).unwrap();
        assert_eq!((ci.mean, ci.lower, ci.upper), (5.0, 5.0, 5.0));
    }

    #[test]
    fn bootstrap_bounds_within_range() {
        let ci = bootstrap_ci(&[0.0, 10.0], 10_000, 0.95, 1).unwrap();
        assert!(ci.lower >= 0.0 && ci.upper <= 10.0);
    }

    #[test]
    fn bootstrap_needs_two() {
        assert_eq!(bootstrap_ci(&[1.0], 10, 0.95, 1), Err(AnalysisError::InsufficientData(1)));
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[0.0, 1.0, 2.0, 3.0], 0.5), 1.5);
    }
}
