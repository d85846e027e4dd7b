//! Discrete-event simulation: CBR traffic, a Bernoulli MAC with retries,
//! per-bit energy, snapshot control accounting and root re-optimisation.

pub mod accounting;
pub mod config;
pub mod sim;
pub mod trace;

pub use accounting::{control_rate_bps, snapshot_round_bytes, SnapshotAccounting};
pub use config::{ControlSizes, CtrlEnergyMode, Protocol, RadioEnergyParams, SimConfig, TraceLevel};
pub use sim::{per_hop_delay, reoptimize_root, run, run_on, setup_topology, transmit, SimError};
pub use trace::{correct_trace_energy, parse_energy_samples, Event, EventKind, TraceError, TraceLog};
