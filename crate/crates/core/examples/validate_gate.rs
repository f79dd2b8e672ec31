//! Full flux-driven two-site XY gate against exp(−iH̄t). Takes tens of
//! seconds in release mode.
//!
//!     cargo run --release --example validate_gate -- 0.01

use rabi_chain::experiment::{validate_gate, ExperimentConfig, GateTarget};

fn main() -> rabi_chain::Result<()> {
    let ratio = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.01);
    let mut cfg = ExperimentConfig::reference();
    cfg.gate.rwa_ratio = ratio;
    cfg.gate.report_static = false;
    let report = validate_gate(&cfg, GateTarget::Xy)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
