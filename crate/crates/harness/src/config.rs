//! Experiment configuration file (TOML).
//!
//! ```toml
//! [sim]
//! duration_s = 1000.0
//! weights = [0.18, 0.22, 0.12, 0.08, 0.25, 0.15]
//!
//! [sim.radio]
//! kind = "log-normal-shadowing"
//!
//! [matrix]
//! sizes = [50, 100, 200]
//! rates = [2.0, 5.0, 10.0]
//! protocols = ["OF0", "ETX-OF", "TABU-UNNORM", "TABURPL"]
//! seeds = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]
//! ```
//!
//! Every section and key is optional; missing values take the defaults.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use dodagsim_core::calibration::CalibrationConfig;
use dodagsim_core::{Protocol, SimConfig};
use serde::{Deserialize, Serialize};

use crate::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentMatrix {
    pub sizes: Vec<usize>,
    pub rates: Vec<f64>,
    pub protocols: Vec<Protocol>,
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentMatrix {
    fn default() -> Self {
        ExperimentMatrix {
            sizes: vec![50, 100, 200],
            rates: vec![2.0, 5.0, 10.0],
            protocols: Protocol::ALL.to_vec(),
            seeds: (1..=10).collect(),
            output_dir: None,
        }
    }
}

impl ExperimentMatrix {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.rates.is_empty() || self.protocols.is_empty() || self.seeds.is_empty() {
            return Err(HarnessError::Usage("matrix axes must be non-empty".into()));
        }
        let distinct: HashSet<_> = self.seeds.iter().collect();
        if distinct.len() != self.seeds.len() {
            return Err(HarnessError::Usage("matrix seeds must be distinct".into()));
        }
        if self.sizes.contains(&0) {
            return Err(HarnessError::Usage("matrix sizes must be >= 1".into()));
        }
        if self.rates.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(HarnessError::Usage("matrix rates must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn run_count(&self) -> usize {
        self.sizes.len() * self.rates.len() * self.protocols.len() * self.seeds.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisSettings {
    pub resamples: usize,
    pub level: f64,
    pub ci_seed: u64,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        AnalysisSettings { resamples: 10_000, level: 0.95, ci_seed: 0x5eed }
    }
}

/// Calibration search parameters plus the scenario it is scored on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationSettings {
    pub search: CalibrationConfig,
    pub nodes: usize,
    pub rate: f64,
    pub seeds: Vec<u64>,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        CalibrationSettings { search: CalibrationConfig::default(), nodes: 50, rate: 10.0, seeds: (1..=3).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub sim: SimConfig,
    pub matrix: ExperimentMatrix,
    pub analysis: AnalysisSettings,
    pub calibration: CalibrationSettings,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Usage(format!("config: {e}")))?;
        cfg.sim.validate().map_err(|e| HarnessError::Usage(format!("config: {e}")))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::Usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Loads `path` if given, else the defaults.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_defaults() {
        assert_eq!(ExperimentConfig::parse("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn overrides_apply() {
        let cfg = ExperimentConfig::parse(
            "[sim]\nnodes = 20\nprotocol = \"OF0\"\nweights = [0.5, 0.5, 0.0, 0.0, 0.0, 0.0]\n\
             [sim.radio]\nkind = \"unit-disc\"\nrange_m = 120.0\n\
             [matrix]\nsizes = [20]\nseeds = [4, 5]\n",
        )
        .unwrap();
        assert_eq!(cfg.sim.nodes, 20);
        assert_eq!(cfg.sim.protocol, Protocol::Of0);
        assert_eq!(cfg.sim.radio.range_m, 120.0);
        assert_eq!(cfg.sim.weights.get(0), 0.5);
        assert_eq!(cfg.matrix.sizes, vec![20]);
        assert_eq!(cfg.matrix.rates, vec![2.0, 5.0, 10.0]);
    }

    #[test]
    fn bad_weights_rejected() {
        assert!(ExperimentConfig::parse("[sim]\nweights = [0.5, 0.5, 0.5, 0.0, 0.0, 0.0]\n").is_err());
        assert!(ExperimentConfig::parse("[sim]\nnodes = \"x\"\n").is_err());
        assert!(ExperimentConfig::parse("[sim]\nretry_limit = 0\n").is_err());
    }

    #[test]
    fn matrix_validation() {
        let mut m = ExperimentMatrix::default();
        assert_eq!(m.run_count(), 360);
        m.validate().unwrap();
        m.seeds = vec![1, 1];
        assert!(m.validate().is_err());
        m.seeds = vec![];
        assert!(m.validate().is_err());
    }
}
