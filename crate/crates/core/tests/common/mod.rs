#![allow(dead_code)]

use rabi_chain::dynamics::{build_dissipators, propagate_lindblad, BathRates, ChainState, ConstantGenerator, PropagationOptions};
use rabi_chain::linalg::{CMatrix, C64};
use rabi_chain::spectrum::{DressedSite, DressedSpecies, QrsParams, Species};
use rabi_chain::units::{ghz, HBAR, K_B};
use std::sync::Arc;

pub fn single_site(params: QrsParams, n_kept: usize) -> DressedSite {
    DressedSite::new(Arc::new(DressedSpecies::new(params, n_kept).unwrap()), 0.0, 0.0).unwrap()
}

/// Species B of the reference chain, GHz gaps.
pub fn reference_site() -> DressedSite {
    single_site(QrsParams::new(ghz(9.0), ghz(10.0), ghz(9.0), 40, Species::B), 4)
}

/// A deep-strong-coupling site scaled down so that ħω ~ k_B T at 15 mK.
pub fn low_frequency_site() -> DressedSite {
    single_site(QrsParams::new(1.8e9, 2.0e9, 1.8e9, 40, Species::B), 4)
}

pub struct SteadyState {
    pub populations: Vec<f64>,
    pub gaps: Vec<f64>,
    pub max_trace_drift: f64,
    pub min_eig: f64,
}

/// Relax the maximally mixed state of one site under its thermal dissipators.
pub fn relax(site: &DressedSite, bath: &BathRates) -> SteadyState {
    let set = build_dissipators(std::slice::from_ref(site), bath).unwrap();
    let n = site.n_kept();
    let mut out = vec![0.0; n];
    for jump in &set.jumps {
        out[jump.from] += jump.rate;
    }
    let slowest = out.iter().copied().fold(f64::INFINITY, f64::min);
    let t_end = 80.0 / slowest;
    let rho0 = CMatrix::identity(n, n) * C64::new(1.0 / n as f64, 0.0);
    let state = ChainState::density(rho0, vec![n]).unwrap();
    let generator = ConstantGenerator::new(&CMatrix::zeros(n, n));
    let opts = PropagationOptions { abs_tol: 1e-12, rel_tol: 1e-12, ..Default::default() }.with_samples(vec![t_end]);
    let traj = propagate_lindblad(&generator, Some(&set), &state, &opts).unwrap();
    SteadyState {
        populations: traj.last().unwrap().populations(),
        gaps: (0..n).map(|k| site.gap(k, 0)).collect(),
        max_trace_drift: traj.max_trace_drift,
        min_eig: traj.min_eig.unwrap(),
    }
}

pub fn boltzmann(omega: f64, temperature: f64) -> f64 {
    (-HBAR * omega / (K_B * temperature)).exp()
}

/// Largest |p_k/p_0 − e^{−ħω_k0/k_BT}| (absolute) and the same relative to
/// the Boltzmann factor.
pub fn detailed_balance_errors(steady: &SteadyState, temperature: f64) -> (f64, f64) {
    let mut abs = 0.0f64;
    let mut rel = 0.0f64;
    for k in 1..steady.populations.len() {
        let want = boltzmann(steady.gaps[k], temperature);
        let got = steady.populations[k] / steady.populations[0];
        abs = abs.max((got - want).abs());
        rel = rel.max(((got - want) / want).abs());
    }
    (abs, rel)
}
