//! SQUID-coupled chain of Rabi systems: effective couplings and the chain
//! Hamiltonian in the truncated dressed product basis.

use crate::error::{invalid, Error, Result};
use crate::linalg::{embed, embed_pair, to_complex, CMatrix, C64};
use crate::spectrum::{DressedSite, DressedSpecies, QrsParams, Species};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

/// Flux excursions above this break the linearized SQUID response.
pub const LINEARIZATION_LIMIT: f64 = 0.1;

/// P = Q value quoted alongside the reference circuit parameters, in the same
/// numeric units. Direct evaluation of the coupling formula with those
/// parameters gives ≈3.656e7 (ω_r in rad/s), so the two differ by ~10×; the
/// quoted number is kept only so runs can opt into it explicitly.
pub const QUOTED_PQ: f64 = 3.655e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    /// Reduced flux quantum φ_o (Wb).
    pub phi_o: f64,
    /// SQUID critical current (A).
    pub i_c: f64,
    /// Resonator impedance (Ω).
    pub z: f64,
    /// Resonator capacitance (F).
    pub c: f64,
    /// Resonator angular frequency (rad/s).
    pub omega_r: f64,
    /// Normalized DC flux offset (rad).
    pub phi_offset: f64,
}

impl CircuitParams {
    /// Reference values: φ_o = 3.2911 fWb, I_c = 1 mA, Z = 100 Ω, C = 200 fF,
    /// ω_r = 2π × 10 GHz, offset π/4.
    pub fn reference() -> Self {
        Self {
            phi_o: 3.2911e-15,
            i_c: 1e-3,
            z: 100.0,
            c: 200e-15,
            omega_r: 2.0 * PI * 10e9,
            phi_offset: PI / 4.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("phi_o", self.phi_o), ("i_c", self.i_c), ("z", self.z), ("c", self.c), ("omega_r", self.omega_r)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.phi_offset.abs() < FRAC_PI_2) || self.phi_offset.cos() <= 0.0 {
            return Err(Error::FluxOffsetOutOfRange(self.phi_offset));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveConstants {
    /// Static coupling P (rad/s).
    pub p: f64,
    /// Flux-modulated coupling Q (rad/s).
    pub q: f64,
}

/// P = φ_o ω_r / (4 I_c Z² C cos Φ̄_o),  Q = φ_o ω_r sin Φ̄_o / (4 I_c Z² C cos² Φ̄_o).
pub fn effective_pq(circuit: &CircuitParams) -> Result<EffectiveConstants> {
    circuit.validate()?;
    let base = circuit.phi_o * circuit.omega_r / (4.0 * circuit.i_c * circuit.z * circuit.z * circuit.c);
    let cos = circuit.phi_offset.cos();
    let sin = circuit.phi_offset.sin();
    Ok(EffectiveConstants { p: base / cos, q: base * sin / (cos * cos) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResonatorPosition {
    /// λ/4 resonator at either end of the chain.
    Edge,
    /// λ/2 resonator between two SQUIDs.
    Bulk,
}

/// Wavenumber of mode `n` of a resonator of the given length (m).
pub fn resonator_mode_numbers(position: ResonatorPosition, n: u32, length: f64) -> Result<f64> {
    if !(length > 0.0) {
        return Err(invalid("length", format!("must be positive, got {length}")));
    }
    match position {
        ResonatorPosition::Bulk if n == 0 => Err(invalid("n", "bulk mode 0 is the null mode")),
        ResonatorPosition::Bulk => Ok(n as f64 * PI / length),
        ResonatorPosition::Edge => Ok(PI * (n as f64 + 0.5) / length),
    }
}

/// One harmonic component of a flux or drive waveform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    pub amplitude: f64,
    /// Angular frequency (rad/s).
    pub frequency: f64,
    pub phase: f64,
}

impl Tone {
    pub fn value(&self, t: f64) -> f64 {
        self.amplitude * (self.frequency * t + self.phase).cos()
    }
}

/// Normalized flux Φ̄(t) = dc + Σ γ_n cos(ν_n t + φ_n) threading one SQUID.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FluxSignal {
    pub tones: Vec<Tone>,
    #[serde(default)]
    pub dc: f64,
}

impl FluxSignal {
    pub fn new(tones: Vec<Tone>) -> Self {
        Self { tones, dc: 0.0 }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.dc + self.tones.iter().map(|tone| tone.value(t)).sum::<f64>()
    }

    /// Upper bound on max_t |Φ̄(t)|.
    pub fn max_excursion(&self) -> f64 {
        self.dc.abs() + self.tones.iter().map(|t| t.amplitude.abs()).sum::<f64>()
    }

    pub fn within_linear_regime(&self) -> bool {
        self.max_excursion() <= LINEARIZATION_LIMIT
    }

    pub fn max_frequency(&self) -> f64 {
        self.tones.iter().map(|t| t.frequency.abs()).fold(0.0, f64::max)
    }
}

/// Couplings of one SQUID to its left and right neighbours (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquidCoupling {
    pub p_left: f64,
    pub p_right: f64,
    pub q_left: f64,
    pub q_right: f64,
}

impl SquidCoupling {
    pub fn uniform(p: f64, q: f64) -> Self {
        Self { p_left: p, p_right: p, q_left: q, q_right: q }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("P", self.p_left), ("P", self.p_right), ("Q", self.q_left), ("Q", self.q_right)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// 2√(P_ℓ P_ℓ+1)
    pub fn static_cross(&self) -> f64 {
        2.0 * (self.p_left * self.p_right).sqrt()
    }

    /// 2√(Q_ℓ Q_ℓ+1)
    pub fn modulated_cross(&self) -> f64 {
        2.0 * (self.q_left * self.q_right).sqrt()
    }
}

/// An open chain of alternating species A-B-A-… coupled by N−1 SQUIDs.
#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub sites: Vec<DressedSite>,
    pub couplings: Vec<SquidCoupling>,
    pub n_kept: usize,
}

impl ChainConfig {
    /// Diagonalize both species once and lay them out starting with `a`.
    pub fn alternating(a: QrsParams, b: QrsParams, n_sites: usize, n_kept: usize, couplings: Vec<SquidCoupling>) -> Result<Self> {
        if a.species == b.species {
            return Err(invalid("species", "adjacent sites need different species tags"));
        }
        let a = Arc::new(DressedSpecies::new(a, n_kept)?);
        let b = Arc::new(DressedSpecies::new(b, n_kept)?);
        Self::from_species(&a, &b, n_sites, couplings)
    }

    pub fn from_species(
        a: &Arc<DressedSpecies>,
        b: &Arc<DressedSpecies>,
        n_sites: usize,
        couplings: Vec<SquidCoupling>,
    ) -> Result<Self> {
        if n_sites < 2 {
            return Err(invalid("n_sites", format!("need at least 2 sites, got {n_sites}")));
        }
        if couplings.len() != n_sites - 1 {
            return Err(Error::DimensionMismatch { expected: n_sites - 1, got: couplings.len() });
        }
        if a.n_kept() != b.n_kept() {
            return Err(Error::DimensionMismatch { expected: a.n_kept(), got: b.n_kept() });
        }
        for c in &couplings {
            c.validate()?;
        }
        let sites = (0..n_sites)
            .map(|l| {
                let species = if l % 2 == 0 { a.clone() } else { b.clone() };
                let p_left = if l > 0 { couplings[l - 1].p_right } else { 0.0 };
                let p_right = if l + 1 < n_sites { couplings[l].p_left } else { 0.0 };
                DressedSite::new(species, p_left, p_right)
            })
            .collect::<Result<Vec<_>>>()?;
        let chain = Self { sites, couplings, n_kept: a.n_kept() };
        chain.validate()?;
        Ok(chain)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites.len() < 2 {
            return Err(invalid("n_sites", "need at least 2 sites"));
        }
        for w in self.sites.windows(2) {
            if w[0].species.params.species == w[1].species.params.species {
                return Err(invalid("species", "adjacent sites carry the same species tag"));
            }
        }
        for s in &self.sites {
            if s.n_kept() != self.n_kept {
                return Err(Error::DimensionMismatch { expected: self.n_kept, got: s.n_kept() });
            }
        }
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.n_kept; self.n_sites()]
    }

    pub fn dim(&self) -> usize {
        self.n_kept.pow(self.n_sites() as u32)
    }

    pub fn species_of(&self, site: usize) -> Species {
        self.sites[site].species.params.species
    }

    /// (a+a†) of one site in the dressed product basis.
    pub fn field(&self, site: usize) -> CMatrix {
        embed(&to_complex(self.sites[site].chi()), site, &self.dims())
    }

    /// (a+a†)² of one site in the dressed product basis.
    pub fn field_squared(&self, site: usize) -> CMatrix {
        embed(&to_complex(self.sites[site].z()), site, &self.dims())
    }

    fn cross_field(&self, squid: usize) -> CMatrix {
        let l = squid;
        embed_pair(&to_complex(self.sites[l].chi()), l, &to_complex(self.sites[l + 1].chi()), l + 1, &self.dims())
    }

    /// H_o = Σ_ℓ Σ_j ε_j |j⟩⟨j|, as the diagonal of the product basis.
    pub fn unperturbed_energies(&self) -> Vec<f64> {
        let dims = self.dims();
        let dim = self.dim();
        (0..dim)
            .map(|idx| {
                digits(idx, &dims).iter().enumerate().map(|(l, &level)| self.sites[l].epsilon[level]).sum::<f64>()
            })
            .collect()
    }

    /// Global parity ⊗_ℓ Π_ℓ as a diagonal.
    pub fn global_parity(&self) -> Vec<f64> {
        let dims = self.dims();
        let parities: Vec<Vec<i8>> = self.sites.iter().map(|s| s.parities()).collect();
        (0..self.dim())
            .map(|idx| {
                digits(idx, &dims).iter().enumerate().map(|(l, &level)| parities[l][level] as f64).product::<f64>()
            })
            .collect()
    }

    /// Time-independent chain Hamiltonian: Rabi terms, the static squeezing
    /// terms P·(a+a†)² and the static cross coupling.
    pub fn build_static_chain(&self) -> CMatrix {
        let mut h = self.static_coupling();
        let dims = self.dims();
        for idx in 0..self.dim() {
            let lambda: f64 = digits(idx, &dims)
                .iter()
                .enumerate()
                .map(|(l, &level)| self.sites[l].species.spectrum.energies[level])
                .sum();
            h[(idx, idx)] += C64::new(lambda, 0.0);
        }
        h
    }

    /// Static chain Hamiltonian minus the bare Rabi energies λ_j.
    pub fn static_coupling(&self) -> CMatrix {
        let mut h = CMatrix::zeros(self.dim(), self.dim());
        for (l, site) in self.sites.iter().enumerate() {
            if site.p_sum != 0.0 {
                h += self.field_squared(l) * C64::new(site.p_sum, 0.0);
            }
        }
        for (s, c) in self.couplings.iter().enumerate() {
            if c.static_cross() != 0.0 {
                h -= self.cross_field(s) * C64::new(c.static_cross(), 0.0);
            }
        }
        h
    }

    /// Operator multiplying Φ̄_s(t) for SQUID `s`:
    /// Q_ℓ (a+a†)²_ℓ + Q_ℓ+1 (a+a†)²_ℓ+1 − 2√(Q_ℓ Q_ℓ+1)(a+a†)_ℓ(a+a†)_ℓ+1.
    pub fn modulation_operator(&self, squid: usize) -> CMatrix {
        let c = &self.couplings[squid];
        self.field_squared(squid) * C64::new(c.q_left, 0.0) + self.field_squared(squid + 1) * C64::new(c.q_right, 0.0)
            - self.cross_field(squid) * C64::new(c.modulated_cross(), 0.0)
    }

    /// Full chain Hamiltonian at time `t` with one flux signal per SQUID.
    pub fn build_modulated_chain(&self, signals: &[FluxSignal], t: f64) -> Result<CMatrix> {
        if signals.len() != self.couplings.len() {
            return Err(Error::DimensionMismatch { expected: self.couplings.len(), got: signals.len() });
        }
        let mut h = self.build_static_chain();
        for (s, signal) in signals.iter().enumerate() {
            let phi = signal.value(t);
            if phi != 0.0 {
                h += self.modulation_operator(s) * C64::new(phi, 0.0);
            }
        }
        Ok(h)
    }

    /// Per-site weight of (a+a†) matrix elements dropped by the truncation.
    pub fn discarded_field_weight(&self) -> Vec<f64> {
        self.sites.iter().map(|s| s.species.discarded_field_weight).collect()
    }
}

/// Mixed-radix digits of a product-basis index, site 0 most significant.
pub fn digits(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (slot, &d) in dims.iter().enumerate().rev() {
        out[slot] = idx % d;
        idx /= d;
    }
    out
}
