//! Dressed-basis thermal dissipators.

use crate::circuit::{digits, ChainConfig};
use crate::error::{invalid, Result};
use crate::linalg::{CMatrix, C64};
use crate::spectrum::DressedSite;
use crate::units::{HBAR, K_B};
use serde::{Deserialize, Serialize};

/// Mean thermal occupation 1/(e^{ħω/k_BT} − 1); exactly 0 at T = 0.
pub fn thermal_occupation(omega: f64, temperature: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(invalid("omega", format!("must be positive, got {omega}")));
    }
    if !(temperature >= 0.0) {
        return Err(invalid("temperature", format!("must be non-negative, got {temperature}")));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let x = HBAR * omega / (K_B * temperature);
    Ok(1.0 / x.exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathRates {
    /// Cavity decay κ_c (1/s).
    pub kappa_c: f64,
    /// Qubit relaxation κ_x (1/s).
    pub kappa_x: f64,
    /// Qubit dephasing κ_z (1/s).
    pub kappa_z: f64,
    /// Bath temperature (K).
    pub temperature: f64,
}

impl BathRates {
    pub fn none() -> Self {
        Self { kappa_c: 0.0, kappa_x: 0.0, kappa_z: 0.0, temperature: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("kappa_c", self.kappa_c), ("kappa_x", self.kappa_x), ("kappa_z", self.kappa_z), ("temperature", self.temperature)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.kappa_c == 0.0 && self.kappa_x == 0.0 && self.kappa_z == 0.0
    }
}

/// One jump operator |to⟩⟨from| on a single site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub site: usize,
    pub from: usize,
    pub to: usize,
    /// Rate (1/s).
    pub rate: f64,
}

/// Γ_kj for one transition, k > j.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionRate {
    pub site: usize,
    pub upper: usize,
    pub lower: usize,
    pub omega: f64,
    pub gamma: f64,
    pub n_thermal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipatorSet {
    pub bath: BathRates,
    pub jumps: Vec<Jump>,
    pub table: Vec<TransitionRate>,
    /// Per site: summed Γ of transitions from levels above the cutoff into
    /// retained levels.
    pub omitted_rate: Vec<f64>,
}

fn transition_gamma(site: &DressedSite, omega: f64, chi: f64, sx: f64, sz: f64, bath: &BathRates) -> f64 {
    let p = &site.species.params;
    omega * (bath.kappa_c / p.omega_r * chi * chi + bath.kappa_x / p.omega_q * sx * sx + bath.kappa_z / p.omega_q * sz * sz)
}

/// Γ_kj^{(ℓ)} = ω_kj(κ_c/ω_r |χ_kj|² + κ_x/ω_q |σx_kj|² + κ_z/ω_q |σz_kj|²)
/// with downward rate Γ(1+n̄) and upward rate Γn̄.
pub fn build_dissipators(sites: &[DressedSite], bath: &BathRates) -> Result<DissipatorSet> {
    bath.validate()?;
    let mut jumps = Vec::new();
    let mut table = Vec::new();
    let mut omitted_rate = Vec::with_capacity(sites.len());
    for (l, site) in sites.iter().enumerate() {
        let n = site.n_kept();
        let spec = &site.species;
        for k in 0..n {
            for j in 0..k {
                let omega = site.gap(k, j);
                if !(omega > 0.0) {
                    return Err(invalid("spectrum", format!("non-positive transition frequency on site {l} ({k}→{j})")));
                }
                let gamma = transition_gamma(site, omega, site.chi()[(k, j)], spec.sigma_x[(k, j)], spec.sigma_z[(k, j)], bath);
                if gamma < 0.0 {
                    return Err(invalid("rate", format!("negative rate on site {l} ({k}→{j})")));
                }
                let n_thermal = thermal_occupation(omega, bath.temperature)?;
                table.push(TransitionRate { site: l, upper: k, lower: j, omega, gamma, n_thermal });
                if gamma == 0.0 {
                    continue;
                }
                jumps.push(Jump { site: l, from: k, to: j, rate: gamma * (1.0 + n_thermal) });
                if n_thermal > 0.0 {
                    jumps.push(Jump { site: l, from: j, to: k, rate: gamma * n_thermal });
                }
            }
        }
        // transitions out of the discarded levels, bare energies
        let energies = &spec.spectrum.energies;
        let chi = crate::spectrum::chi_full(&spec.spectrum);
        let full_sx = spec.spectrum.full_elements(&crate::spectrum::sigma_x(spec.params.n_fock));
        let full_sz = spec.spectrum.full_elements(&crate::spectrum::sigma_z(spec.params.n_fock));
        let top = energies.len().min(n + 8);
        let mut omitted = 0.0;
        for k in n..top {
            for j in 0..n {
                let omega = energies[k] - energies[j];
                if omega > 0.0 {
                    omitted += transition_gamma(site, omega, chi[(k, j)], full_sx[(k, j)], full_sz[(k, j)], bath);
                }
            }
        }
        omitted_rate.push(omitted);
    }
    Ok(DissipatorSet { bath: *bath, jumps, table, omitted_rate })
}

impl DissipatorSet {
    pub fn is_empty(&self) -> bool {
        self.jumps.is_empty()
    }

    /// Index tables for applying the dissipators on a product space.
    pub fn compile(&self, dims: &[usize]) -> CompiledDissipators {
        let dim: usize = dims.iter().product();
        let strides: Vec<usize> = (0..dims.len()).map(|l| dims[l + 1..].iter().product()).collect();
        let all_digits: Vec<Vec<usize>> = (0..dim).map(|i| digits(i, dims)).collect();
        let mut decay = vec![0.0; dim];
        let mut channels = Vec::with_capacity(self.jumps.len());
        for jump in &self.jumps {
            let s = strides[jump.site];
            let mut pairs = Vec::new();
            for (i, d) in all_digits.iter().enumerate() {
                if d[jump.site] == jump.from {
                    decay[i] += jump.rate;
                }
                if d[jump.site] == jump.to {
                    let source = i + jump.from * s - jump.to * s;
                    pairs.push((i, source));
                }
            }
            channels.push((jump.rate, pairs));
        }
        CompiledDissipators { decay, channels }
    }
}

/// Σ_c rate_c D[|to⟩⟨from|] in index form.
#[derive(Debug, Clone)]
pub struct CompiledDissipators {
    /// Σ rate over channels whose `from` level matches the basis state.
    decay: Vec<f64>,
    /// (rate, [(target, source)]) with OρO†[t_a, t_b] = ρ[s_a, s_b].
    channels: Vec<(f64, Vec<(usize, usize)>)>,
}

impl CompiledDissipators {
    /// out += Σ_c rate_c (O_c ρ O_c† − ½{O_c†O_c, ρ}).
    pub fn accumulate(&self, rho: &CMatrix, out: &mut CMatrix) {
        let n = rho.nrows();
        for j in 0..n {
            for i in 0..n {
                let g = self.decay[i] + self.decay[j];
                if g != 0.0 {
                    out[(i, j)] -= rho[(i, j)] * (0.5 * g);
                }
            }
        }
        for (rate, pairs) in &self.channels {
            let r = C64::new(*rate, 0.0);
            for &(tb, sb) in pairs {
                for &(ta, sa) in pairs {
                    out[(ta, tb)] += rho[(sa, sb)] * r;
                }
            }
        }
    }
}

/// Dissipators for a chain; thin wrapper over [`build_dissipators`].
pub fn chain_dissipators(chain: &ChainConfig, bath: &BathRates) -> Result<DissipatorSet> {
    build_dissipators(&chain.sites, bath)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{DressedSpecies, QrsParams, Species};
    use std::sync::Arc;

    #[test]
    fn zero_temperature_is_empty() {
        assert_eq!(thermal_occupation(1e10, 0.0).unwrap(), 0.0);
        assert!(thermal_occupation(0.0, 1.0).is_err());
    }

    #[test]
    fn unit_occupation_at_ln2() {
        let t = 0.02;
        let omega = K_B * t * std::f64::consts::LN_2 / HBAR;
        assert!((thermal_occupation(omega, t).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bare_cavity_decay() {
        let omega_r = 2.0 * std::f64::consts::PI * 1e10;
        let sp = Arc::new(DressedSpecies::new(QrsParams::new(0.5 * omega_r, omega_r, 0.0, 12, Species::A), 3).unwrap());
        let site = DressedSite::new(sp, 0.0, 0.0).unwrap();
        // g = 0, ω_q < ω_r: levels |g,0⟩, |e,0⟩, |g,1⟩
        let bath = BathRates { kappa_c: 1e5, kappa_x: 0.0, kappa_z: 0.0, temperature: 0.0 };
        let set = build_dissipators(&[site], &bath).unwrap();
        let cav = set.table.iter().find(|r| r.upper == 2 && r.lower == 0).unwrap();
        assert!((cav.gamma - 1e5).abs() < 1e-6);
        assert_eq!(set.jumps.len(), 1);
    }

    #[test]
    fn no_rates_no_jumps() {
        let sp = Arc::new(DressedSpecies::new(QrsParams::new(0.9, 1.0, 0.6, 20, Species::A), 4).unwrap());
        let site = DressedSite::new(sp, 0.0, 0.0).unwrap();
        let set = build_dissipators(&[site], &BathRates::none()).unwrap();
        assert!(set.is_empty());
    }
}
