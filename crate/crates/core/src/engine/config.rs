use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cost::{HopFeature, WeightVector};
use crate::optimizer::TabuParams;
use crate::topology::{Area, Position, RadioKind, RadioModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "OF0")]
    Of0,
    #[serde(rename = "ETX-OF")]
    EtxOf,
    #[serde(rename = "TABU-UNNORM")]
    TabuUnnorm,
    #[serde(rename = "TABURPL")]
    Taburpl,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [Protocol::Of0, Protocol::EtxOf, Protocol::TabuUnnorm, Protocol::Taburpl];

    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Of0 => "OF0",
            Protocol::EtxOf => "ETX-OF",
            Protocol::TabuUnnorm => "TABU-UNNORM",
            Protocol::Taburpl => "TABURPL",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_uppercase().replace('_', "-").as_str() {
            "OF0" => Ok(Protocol::Of0),
            "ETX-OF" | "ETX" => Ok(Protocol::EtxOf),
            "TABU-UNNORM" => Ok(Protocol::TabuUnnorm),
            "TABURPL" => Ok(Protocol::Taburpl),
            _ => Err(format!("unknown protocol `{s}` (expected OF0, ETX-OF, TABU-UNNORM or TABURPL)")),
        }
    }
}

/// Where snapshot control energy is charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CtrlEnergyMode {
    /// Debited by the engine when the snapshot round happens.
    Inline,
    /// Left out of the run; apply `correct_trace_energy` afterwards.
    Deferred,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceLevel {
    /// Counters and residual samples only.
    Off,
    /// Also keep control, energy and death events.
    Control,
    /// Every event.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadioEnergyParams {
    pub i_tx_ma: f64,
    pub i_rx_ma: f64,
    pub v_bat: f64,
    pub bitrate_bps: f64,
}

impl Default for RadioEnergyParams {
    fn default() -> Self {
        RadioEnergyParams { i_tx_ma: 17.4, i_rx_ma: 19.7, v_bat: 3.0, bitrate_bps: 250e3 }
    }
}

impl RadioEnergyParams {
    pub fn e_tx_per_bit(&self) -> f64 {
        self.i_tx_ma * 1e-3 * self.v_bat / self.bitrate_bps
    }

    pub fn e_rx_per_bit(&self) -> f64 {
        self.i_rx_ma * 1e-3 * self.v_bat / self.bitrate_bps
    }

    pub fn airtime(&self, bits: u64) -> f64 {
        bits as f64 / self.bitrate_bps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlSizes {
    pub snapshot_header: u32,
    pub per_neighbour: u32,
    pub max_neighbours: u32,
    pub dis: u32,
    pub dio: u32,
    pub dao: u32,
}

impl Default for ControlSizes {
    fn default() -> Self {
        ControlSizes { snapshot_header: 18, per_neighbour: 6, max_neighbours: 6, dis: 18, dio: 18, dao: 24 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub nodes: usize,
    pub area: Area,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sink_position: Option<Position>,
    pub radio: RadioModel,
    pub duration_s: f64,
    /// Extra time after `duration_s` with traffic generation stopped.
    pub drain_s: f64,
    pub rate_pps: f64,
    pub payload_bytes: u32,
    pub header_bytes: u32,
    pub ack_bytes: u32,
    pub protocol: Protocol,
    pub snapshot_period_s: f64,
    pub retry_limit: u32,
    pub queue_capacity: usize,
    pub initial_energy_j: f64,
    pub energy: RadioEnergyParams,
    pub weights: WeightVector,
    pub tabu: TabuParams,
    pub hop_feature: HopFeature,
    pub ctrl_energy: CtrlEnergyMode,
    pub control: ControlSizes,
    pub repair_holddown_s: f64,
    pub turnaround_s: f64,
    pub propagation_mps: f64,
    pub redraw_until_connected: bool,
    pub max_redraws: u32,
    pub trace: TraceLevel,
    /// Log per-edge (distance to sink, hop count) samples at each snapshot.
    pub log_dh_samples: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            nodes: 50,
            area: Area::new(1000.0, 1000.0),
            sink_position: None,
            radio: RadioModel { kind: RadioKind::LogNormalShadowing, ..RadioModel::default() },
            duration_s: 1000.0,
            drain_s: 2.0,
            rate_pps: 10.0,
            payload_bytes: 512,
            header_bytes: 25,
            ack_bytes: 11,
            protocol: Protocol::Taburpl,
            snapshot_period_s: 90.0,
            retry_limit: 7,
            queue_capacity: 8,
            initial_energy_j: 1000.0,
            energy: RadioEnergyParams::default(),
            weights: WeightVector::default(),
            tabu: TabuParams::default(),
            hop_feature: HopFeature::ViaParentDepth,
            ctrl_energy: CtrlEnergyMode::Inline,
            control: ControlSizes::default(),
            repair_holddown_s: 5.0,
            turnaround_s: 192e-6,
            propagation_mps: 3.0e8,
            redraw_until_connected: false,
            max_redraws: 1000,
            trace: TraceLevel::Off,
            log_dh_samples: false,
        }
    }
}

impl SimConfig {
    pub fn frame_bits(&self) -> u64 {
        (self.payload_bytes as u64 + self.header_bytes as u64) * 8
    }

    pub fn ack_bits(&self) -> u64 {
        self.ack_bytes as u64 * 8
    }

    /// Energy of one data frame transmission; a node below this is dead.
    pub fn frame_tx_energy(&self) -> f64 {
        self.frame_bits() as f64 * self.energy.e_tx_per_bit()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.nodes == 0 {
            return Err("nodes must be >= 1".into());
        }
        if !(self.duration_s > 0.0) {
            return Err("duration must be > 0".into());
        }
        if !(self.rate_pps >= 0.0) || !self.rate_pps.is_finite() {
            return Err("rate must be a finite value >= 0".into());
        }
        if !(self.snapshot_period_s > 0.0) {
            return Err("snapshot period must be > 0".into());
        }
        if self.retry_limit == 0 {
            return Err("retry limit must be >= 1".into());
        }
        if self.queue_capacity == 0 {
            return Err("queue capacity must be >= 1".into());
        }
        if !(self.initial_energy_j > 0.0) {
            return Err("initial energy must be > 0".into());
        }
        if !(self.drain_s >= 0.0) || !(self.repair_holddown_s >= 0.0) || !(self.turnaround_s >= 0.0) {
            return Err("drain, hold-down and turnaround must be >= 0".into());
        }
        if !(self.energy.bitrate_bps > 0.0) || !(self.propagation_mps > 0.0) {
            return Err("bit rate and propagation speed must be > 0".into());
        }
        self.radio.validate().map_err(|e| e.to_string())?;
        self.tabu.validate().map_err(|e| e.to_string())?;
        Ok(())
    }
}
