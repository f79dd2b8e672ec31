//! Experiment configuration, orchestration and reporting.

pub mod config;
pub mod gate;
pub mod run;

pub use config::{reference_coupling, ExperimentConfig, GateTarget, ProtocolKind};
pub use gate::{average_gate_fidelity, validate_gate, GateReport};
pub use run::{emit_csv, meta_path, read_csv, run_experiment, state_seed, write_report, FidelityReport};
