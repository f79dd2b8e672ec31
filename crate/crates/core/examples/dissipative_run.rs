//! Noisy Heisenberg benchmark over random initial states, written as CSV.
//!
//!     cargo run --release --example dissipative_run -- out.csv

use rabi_chain::experiment::{run_experiment, write_report, ExperimentConfig};
use std::path::PathBuf;

fn main() -> rabi_chain::Result<()> {
    let path = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "heisenberg_n2.csv".into()));
    let mut cfg = ExperimentConfig::reference();
    cfg.sampling.n_states = 8;
    let report = run_experiment(&cfg)?;
    for (t, f) in report.time_s.iter().zip(&report.fid_mean) {
        println!("{:8.4} μs  F = {f:.6}", t * 1e6);
    }
    write_report(&report, &path, true)?;
    println!("wrote {}", path.display());
    Ok(())
}
