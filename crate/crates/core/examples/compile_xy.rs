//! Gap table and four-tone XY flux for one A-B pair.

use rabi_chain::experiment::ExperimentConfig;
use rabi_chain::pulse::{compile_xy, CompileOptions, GapTable};

fn main() -> rabi_chain::Result<()> {
    let cfg = ExperimentConfig::reference();
    let chain = cfg.chain_config(2)?;
    let (a, b, squid) = (&chain.sites[0], &chain.sites[1], &chain.couplings[0]);

    let table = GapTable::new(a, b)?;
    for (label, f) in table.ladder_frequencies() {
        println!("{label:>8} = {f:.5e} rad/s");
    }
    println!("min ladder spacing {:.4e} rad/s", table.min_spacing());

    let probe = compile_xy(a, b, squid, 0.0, &CompileOptions::default())?;
    let q = (squid.q_left * squid.q_right).sqrt();
    let f = 0.01 * probe.margin.delta_min / q;
    let flux = compile_xy(a, b, squid, f, &CompileOptions::default())?;
    println!("\nC = {:.4e} rad/s, Δ_min = {:.4e} rad/s ({}), ratio {:.3}", flux.strength, flux.margin.delta_min, flux.margin.worst_term, flux.rwa_ratio());
    for (tone, target) in flux.signal.tones.iter().zip(&flux.targets) {
        println!("  {target}: amplitude {:+.4e}, ν = {:.5e} rad/s, phase {:.3}", tone.amplitude, tone.frequency, tone.phase);
    }
    println!("max |Φ̄| = {:.3e}", flux.signal.max_excursion());
    Ok(())
}
