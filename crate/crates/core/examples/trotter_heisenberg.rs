//! Trotter error of the seven-segment Heisenberg protocol at the effective
//! level, against the exact propagator.

use rabi_chain::dynamics::schedule_unitary;
use rabi_chain::experiment::average_gate_fidelity;
use rabi_chain::pulse::{couplings_from_lambdas, schedule_heisenberg};
use rabi_chain::spin1::{exact_propagator, model_hamiltonian, ModelKind, ModelSpec};
use std::f64::consts::PI;

fn main() -> rabi_chain::Result<()> {
    let j = 2.0 * PI * 0.0366e9;
    let t = PI / j;
    let r = 1.4e8;
    for n_sites in [2, 3] {
        let spec = ModelSpec { kind: ModelKind::Heisenberg { lambda_x: j, lambda_y: j, lambda_z: j / 2.0 }, n_sites };
        let exact = exact_propagator(&model_hamiltonian(&spec)?, t)?;
        let (xy, yz, zx) = couplings_from_lambdas([j, j, j / 2.0])?;
        println!("N = {n_sites}");
        for n_trotter in [5, 10, 20, 40, 400] {
            let schedule = schedule_heisenberg(t, n_trotter, xy, yz, zx, r)?;
            let u = schedule_unitary(&schedule, n_sites)?;
            let infidelity = 1.0 - average_gate_fidelity(&exact, &u);
            println!("  n_o = {n_trotter:>3}: infidelity {infidelity:.3e}, duration {:.4e} s", schedule.total_duration_s);
        }
    }
    Ok(())
}
