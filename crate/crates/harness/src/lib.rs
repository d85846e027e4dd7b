//! Experiment driver: configuration files, the protocol x size x load matrix,
//! calibration and ablation runs, and their CSV outputs.

pub mod ablation;
pub mod calibrate;
pub mod config;
pub mod matrix;
pub mod output;

use std::io;

use dodagsim_core::engine::SimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("simulation failed: {0}")]
    Simulation(String),
    #[error("connectivity: {0}")]
    Connectivity(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// Process exit code: 1 usage, 2 simulation, 3 connectivity.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 1,
            HarnessError::Connectivity(_) => 3,
            HarnessError::Simulation(_) | HarnessError::Io(_) | HarnessError::Csv(_) => 2,
        }
    }
}

impl From<SimError> for HarnessError {
    fn from(e: SimError) -> Self {
        if e.is_connectivity() {
            HarnessError::Connectivity(e.to_string())
        } else if let SimError::Config(msg) = e {
            HarnessError::Usage(msg)
        } else {
            HarnessError::Simulation(e.to_string())
        }
    }
}

impl From<dodagsim_core::calibration::CalibError> for HarnessError {
    fn from(e: dodagsim_core::calibration::CalibError) -> Self {
        HarnessError::Simulation(e.to_string())
    }
}

impl From<dodagsim_core::analysis::AnalysisError> for HarnessError {
    fn from(e: dodagsim_core::analysis::AnalysisError) -> Self {
        HarnessError::Simulation(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Parses `1,2,7` or an inclusive range `1..10`, or a mix: `1..3,9`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| HarnessError::Usage(format!("bad seed range `{part}`")))?;
            let b: u64 = b.trim().parse().map_err(|_| HarnessError::Usage(format!("bad seed range `{part}`")))?;
            if b < a {
                return Err(HarnessError::Usage(format!("empty seed range `{part}`")));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| HarnessError::Usage(format!("bad seed `{part}`")))?);
        }
    }
    if out.is_empty() {
        return Err(HarnessError::Usage("no seeds given".into()));
    }
    Ok(out)
}

/// Runs `f` on a pool of `workers` threads (0 = rayon default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Usage(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_ranges_and_lists() {
        assert_eq!(parse_seeds("1..3,9").unwrap(), vec![1, 2, 3, 9]);
        assert_eq!(parse_seeds("5").unwrap(), vec![5]);
        assert!(parse_seeds("3..1").is_err());
        assert!(parse_seeds("x").is_err());
        assert!(parse_seeds("").is_err());
    }
}
