use crate::circuit::{effective_pq, ChainConfig, CircuitParams, EffectiveConstants, SquidCoupling};
use crate::dynamics::{BathRates, PropagationOptions};
use crate::error::{invalid, Error, Result};
use crate::pulse::{couplings_from_lambdas, schedule_heisenberg, schedule_ising, schedule_xxz, CompileOptions, GateSchedule};
use crate::spectrum::{QrsParams, Species};
use crate::spin1::{ModelKind, ModelSpec};
use crate::units::{ghz, AngularFrequency, CyclicFrequency};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub n_sites: usize,
    /// Dressed levels kept per site.
    pub n_kept: usize,
    /// Fock cutoff for each Rabi diagonalization.
    pub n_fock: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesSection {
    pub omega_q: AngularFrequency,
    pub omega_r: AngularFrequency,
    pub g: AngularFrequency,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesPair {
    pub a: SpeciesSection,
    pub b: SpeciesSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSection {
    pub phi_o_wb: f64,
    pub i_c_a: f64,
    pub z_ohm: f64,
    pub c_f: f64,
    pub omega_r_rad_s: f64,
    pub phi_offset_rad: f64,
    /// Replace the computed P (rad/s).
    #[serde(default)]
    pub p_override_rad_s: Option<f64>,
    /// Replace the computed Q (rad/s).
    #[serde(default)]
    pub q_override_rad_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    /// Trotterized rotations + XY/XX gates (Heisenberg and XXZ models).
    Digital,
    /// A single analog segment (Ising model).
    Analog,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub kind: ProtocolKind,
    /// Simulated model time t (s).
    pub t_s: f64,
    #[serde(default = "one")]
    pub n_trotter: usize,
    /// Rotation rate r (rad/s). When absent it is derived from
    /// `total_duration_s`.
    #[serde(default)]
    pub r_rad_s: Option<f64>,
    #[serde(default)]
    pub total_duration_s: Option<f64>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipationSection {
    pub enabled: bool,
    pub kappa_c: AngularFrequency,
    pub kappa_x: AngularFrequency,
    pub kappa_z: AngularFrequency,
    pub temperature_k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    pub n_states: usize,
    pub seed: u64,
    /// Sample count for analog runs (digital runs sample every Trotter step).
    #[serde(default = "ten")]
    pub n_samples: usize,
}

fn ten() -> usize {
    10
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateTarget {
    Xy,
    Xx,
    Rot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSection {
    pub kind: GateTarget,
    /// Strength over Δ_min; ignored when `f` is set.
    #[serde(default = "default_ratio")]
    pub rwa_ratio: f64,
    /// Explicit flux prefactor f.
    #[serde(default)]
    pub f: Option<f64>,
    /// Explicit gate duration (s); required when the strength is zero.
    #[serde(default)]
    pub duration_s: Option<f64>,
    /// Propagate the residual static couplings alongside the gate.
    #[serde(default)]
    pub include_static: bool,
    /// Also report the error from the static couplings alone.
    #[serde(default = "yes")]
    pub report_static: bool,
    #[serde(default)]
    pub guards: Option<CompileOptions>,
}

fn default_ratio() -> f64 {
    0.01
}

fn yes() -> bool {
    true
}

impl Default for GateSection {
    fn default() -> Self {
        Self { kind: GateTarget::Xy, rwa_ratio: 0.01, f: None, duration_s: None, include_static: false, report_static: true, guards: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub chain: ChainSection,
    pub species: SpeciesPair,
    pub circuit: CircuitSection,
    pub model: ModelKind,
    pub protocol: ProtocolSection,
    pub dissipation: DissipationSection,
    pub sampling: SamplingSection,
    #[serde(default)]
    pub propagation: PropagationOptions,
    #[serde(default)]
    pub gate: GateSection,
    #[serde(default = "no_output")]
    pub output: OutputSection,
}

fn no_output() -> OutputSection {
    OutputSection { path: None }
}

/// J = 2π × 36.6 MHz.
pub fn reference_coupling() -> f64 {
    ghz(0.0366)
}

impl ExperimentConfig {
    /// Two-site dissipative Heisenberg run with λ = (J, J, J/2), t = π/J,
    /// n_o = 10 and a total duration of 0.486 μs.
    pub fn reference() -> Self {
        let j = reference_coupling();
        let circuit = CircuitParams::reference();
        Self {
            chain: ChainSection { n_sites: 2, n_kept: 4, n_fock: 40 },
            species: SpeciesPair {
                a: SpeciesSection { omega_q: AngularFrequency::Cyclic(cyc(9.0)), omega_r: AngularFrequency::Cyclic(cyc(10.0)), g: AngularFrequency::Cyclic(cyc(6.0)) },
                b: SpeciesSection { omega_q: AngularFrequency::Cyclic(cyc(9.0)), omega_r: AngularFrequency::Cyclic(cyc(10.0)), g: AngularFrequency::Cyclic(cyc(9.0)) },
            },
            circuit: CircuitSection {
                phi_o_wb: circuit.phi_o,
                i_c_a: circuit.i_c,
                z_ohm: circuit.z,
                c_f: circuit.c,
                omega_r_rad_s: circuit.omega_r,
                phi_offset_rad: circuit.phi_offset,
                p_override_rad_s: None,
                q_override_rad_s: None,
            },
            model: ModelKind::Heisenberg { lambda_x: j, lambda_y: j, lambda_z: j / 2.0 },
            protocol: ProtocolSection { kind: ProtocolKind::Digital, t_s: PI / j, n_trotter: 10, r_rad_s: None, total_duration_s: Some(0.486e-6) },
            dissipation: DissipationSection {
                enabled: true,
                kappa_c: AngularFrequency::Cyclic(CyclicFrequency { khz: 10.0, ..Default::default() }),
                kappa_x: AngularFrequency::Cyclic(CyclicFrequency { khz: 20.0, ..Default::default() }),
                kappa_z: AngularFrequency::Cyclic(CyclicFrequency { khz: 10.0, ..Default::default() }),
                temperature_k: 0.015,
            },
            sampling: SamplingSection { n_states: 20, seed: 2024, n_samples: 10 },
            propagation: PropagationOptions::default(),
            gate: GateSection::default(),
            output: no_output(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.chain.n_sites < 2 {
            return Err(invalid("chain.n_sites", "need at least 2 sites"));
        }
        if self.chain.n_kept < 3 {
            return Err(invalid("chain.n_kept", "need at least 3 levels"));
        }
        if self.chain.n_fock < self.chain.n_kept {
            return Err(invalid("chain.n_fock", "must be at least n_kept"));
        }
        let (a, b) = self.species_params();
        a.validate()?;
        b.validate()?;
        self.circuit_params().validate()?;
        for (name, v) in [("circuit.p_override_rad_s", self.circuit.p_override_rad_s), ("circuit.q_override_rad_s", self.circuit.q_override_rad_s)] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(invalid(name, "must be non-negative"));
                }
            }
        }
        self.model_spec().validate()?;
        let p = &self.protocol;
        if !(p.t_s > 0.0 && p.t_s.is_finite()) {
            return Err(invalid("protocol.t_s", "must be positive"));
        }
        match (p.kind, self.model) {
            (ProtocolKind::Analog, ModelKind::Ising { .. }) | (ProtocolKind::Digital, ModelKind::Heisenberg { .. } | ModelKind::Xxz { .. }) => {}
            _ => return Err(invalid("protocol.kind", "digital runs need a Heisenberg/XXZ model, analog runs an Ising model")),
        }
        if p.kind == ProtocolKind::Digital && p.r_rad_s.is_none() && p.total_duration_s.is_none() {
            return Err(invalid("protocol", "set r_rad_s or total_duration_s"));
        }
        self.bath().validate()?;
        if self.sampling.n_states == 0 {
            return Err(invalid("sampling.n_states", "need at least one initial state"));
        }
        if self.sampling.n_samples == 0 {
            return Err(invalid("sampling.n_samples", "need at least one sample"));
        }
        self.propagation.validate(0.0)?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn species_params(&self) -> (QrsParams, QrsParams) {
        let make = |s: &SpeciesSection, tag| QrsParams::new(s.omega_q.rad_per_s(), s.omega_r.rad_per_s(), s.g.rad_per_s(), self.chain.n_fock, tag);
        (make(&self.species.a, Species::A), make(&self.species.b, Species::B))
    }

    pub fn circuit_params(&self) -> CircuitParams {
        let c = &self.circuit;
        CircuitParams { phi_o: c.phi_o_wb, i_c: c.i_c_a, z: c.z_ohm, c: c.c_f, omega_r: c.omega_r_rad_s, phi_offset: c.phi_offset_rad }
    }

    pub fn effective_constants(&self) -> Result<EffectiveConstants> {
        let computed = effective_pq(&self.circuit_params())?;
        Ok(EffectiveConstants {
            p: self.circuit.p_override_rad_s.unwrap_or(computed.p),
            q: self.circuit.q_override_rad_s.unwrap_or(computed.q),
        })
    }

    pub fn chain_config(&self, n_sites: usize) -> Result<ChainConfig> {
        let pq = self.effective_constants()?;
        let (a, b) = self.species_params();
        ChainConfig::alternating(a, b, n_sites, self.chain.n_kept, vec![SquidCoupling::uniform(pq.p, pq.q); n_sites - 1])
    }

    pub fn model_spec(&self) -> ModelSpec {
        ModelSpec { kind: self.model, n_sites: self.chain.n_sites }
    }

    pub fn bath(&self) -> BathRates {
        let d = &self.dissipation;
        if !d.enabled {
            return BathRates::none();
        }
        BathRates {
            kappa_c: d.kappa_c.rad_per_s(),
            kappa_x: d.kappa_x.rad_per_s(),
            kappa_z: d.kappa_z.rad_per_s(),
            temperature: d.temperature_k,
        }
    }

    /// Rotation rate, derived from the total duration when not given.
    pub fn rotation_rate(&self) -> Result<f64> {
        let p = &self.protocol;
        if let Some(r) = p.r_rad_s {
            return Ok(r);
        }
        let total = p.total_duration_s.ok_or_else(|| invalid("protocol", "set r_rad_s or total_duration_s"))?;
        let (gates, rotations) = match self.model {
            ModelKind::Heisenberg { .. } => (3.0, 4.0),
            ModelKind::Xxz { .. } => (2.0, 2.0),
            ModelKind::Ising { .. } => return Ok(0.0),
        };
        let rot_time = total - gates * p.t_s;
        if !(rot_time > 0.0) {
            return Err(invalid("protocol.total_duration_s", "shorter than the gate time alone"));
        }
        Ok(rotations * p.n_trotter as f64 * FRAC_PI_2 / rot_time)
    }

    pub fn schedule(&self) -> Result<GateSchedule> {
        let p = &self.protocol;
        match self.model {
            ModelKind::Heisenberg { lambda_x, lambda_y, lambda_z } => {
                let (xy, yz, zx) = couplings_from_lambdas([lambda_x, lambda_y, lambda_z])?;
                schedule_heisenberg(p.t_s, p.n_trotter, xy, yz, zx, self.rotation_rate()?)
            }
            ModelKind::Xxz { lambda_xy, lambda_z } => schedule_xxz(p.t_s, p.n_trotter, lambda_xy, lambda_z, self.rotation_rate()?),
            ModelKind::Ising { j, b } => schedule_ising(p.t_s, j, b),
        }
    }
}

fn cyc(g: f64) -> CyclicFrequency {
    CyclicFrequency { ghz: g, ..Default::default() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_round_trips_through_toml() {
        let cfg = ExperimentConfig::reference();
        cfg.validate().unwrap();
        let text = cfg.to_toml_string().unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn reference_duration() {
        let s = ExperimentConfig::reference().schedule().unwrap();
        assert!((s.total_duration_s - 0.486e-6).abs() < 1e-18);
    }

    #[test]
    fn shipped_config_is_the_reference() {
        let text = include_str!("../../configs/reference.toml");
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.hash(), ExperimentConfig::reference().hash());
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut text = ExperimentConfig::reference().to_toml_string().unwrap();
        text.push_str("\n[extra]\nx = 1\n");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn mismatched_protocol_rejected() {
        let mut cfg = ExperimentConfig::reference();
        cfg.protocol.kind = ProtocolKind::Analog;
        assert!(cfg.validate().is_err());
    }
}
