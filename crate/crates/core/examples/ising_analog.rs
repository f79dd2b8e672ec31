//! Analog transverse-field Ising run with and without dissipation.

use rabi_chain::experiment::{run_experiment, ExperimentConfig, ProtocolKind};
use rabi_chain::spin1::ModelKind;
use rabi_chain::units::ghz;
use std::f64::consts::PI;

fn main() -> rabi_chain::Result<()> {
    let mut cfg = ExperimentConfig::reference();
    let j = ghz(0.0366);
    cfg.model = ModelKind::Ising { j, b: ghz(0.01) };
    cfg.protocol.kind = ProtocolKind::Analog;
    cfg.protocol.t_s = PI / j;
    cfg.sampling.n_states = 8;
    for enabled in [false, true] {
        cfg.dissipation.enabled = enabled;
        let report = run_experiment(&cfg)?;
        println!("dissipation {enabled}: final mean fidelity {:.8}", report.final_mean().unwrap_or(f64::NAN));
    }
    Ok(())
}
