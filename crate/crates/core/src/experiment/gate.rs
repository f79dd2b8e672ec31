//! Single-gate check: full flux-driven propagation against the effective
//! spin-1 exponential.

use super::config::{ExperimentConfig, GateTarget};
use crate::circuit::{ChainConfig, FluxSignal};
use crate::dynamics::integrate::{propagate_columns, PropagationOptions};
use crate::dynamics::state::spin1_indices;
use crate::dynamics::InteractionGenerator;
use crate::error::{invalid, Result};
use crate::linalg::{expm_hermitian, trace, CMatrix, CVector, C64};
use crate::pulse::{compile_rotation, compile_xx, compile_xy, CompileOptions, CompiledFlux};
use crate::spin1::{bond_sum, field_sum_on, haar_random_state, Axis};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

/// End times per period used for the cycle-averaged infidelity.
const CYCLE_SAMPLES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub kind: GateTarget,
    /// Flux prefactor f (XY/XX) or rotation rate r (ROT).
    pub f: f64,
    /// Effective strength C or r (rad/s).
    pub strength_rad_s: f64,
    /// Closest unwanted resonance (rad/s).
    pub delta_min_rad_s: f64,
    pub worst_term: String,
    /// strength / Δ_min.
    pub rwa_ratio: f64,
    pub duration_s: f64,
    /// 1 − average gate fidelity on the spin-1 subspace.
    pub infidelity: f64,
    /// Mean infidelity over one period of the closest unwanted term,
    /// starting at the gate time.
    pub infidelity_cycle_mean: f64,
    /// Population lost from the spin-1 subspace, averaged over inputs.
    pub leakage: f64,
    /// Overlap for one seeded random input state.
    pub state_fidelity: f64,
    /// Largest change of ⟨Π⟩ over the basis inputs.
    pub parity_drift: f64,
    /// Infidelity against the identity caused by the static couplings alone
    /// over the same duration.
    pub static_residual: Option<f64>,
    /// Smallest frequency of a static coupling term (rad/s).
    pub static_min_rad_s: Option<f64>,
    pub max_flux_excursion: f64,
    pub linear_regime: bool,
    pub accepted_steps: usize,
    pub notes: Vec<String>,
}

/// Average gate fidelity of the block `m` (possibly non-unitary) against `u`.
pub fn average_gate_fidelity(u: &CMatrix, m: &CMatrix) -> f64 {
    let d = u.nrows() as f64;
    let overlap = trace(&(u.adjoint() * m)).norm_sqr();
    let norm = trace(&(m.adjoint() * m)).re;
    (overlap + norm) / (d * (d + 1.0))
}

struct Plan {
    fluxes: Vec<FluxSignal>,
    drives: Vec<Vec<crate::circuit::Tone>>,
    effective: CMatrix,
    f: f64,
    strength: f64,
    delta_min: f64,
    worst: String,
    static_min: Option<f64>,
    duration: f64,
    notes: Vec<String>,
}

fn plan_flux(chain: &ChainConfig, gate: &super::config::GateSection, guards: &CompileOptions, xx: bool) -> Result<Plan> {
    let (a, b, c) = (&chain.sites[0], &chain.sites[1], &chain.couplings[0]);
    let compile = |f: f64, opts: &CompileOptions| -> Result<CompiledFlux> {
        if xx {
            compile_xx(a, b, c, f, opts)
        } else {
            compile_xy(a, b, c, f, opts)
        }
    };
    let probe = compile(0.0, guards)?;
    let q = (c.q_left * c.q_right).sqrt();
    if q == 0.0 {
        return Err(invalid("Q", "gate validation needs a modulated coupling"));
    }
    let f = gate.f.unwrap_or(gate.rwa_ratio * probe.margin.delta_min / q);
    let flux = compile(f, guards)?;
    let strength = flux.strength;
    let duration = match gate.duration_s {
        Some(d) => d,
        None if strength != 0.0 => FRAC_PI_4 / strength.abs(),
        None => return Err(invalid("gate.duration_s", "needed when the gate strength is zero")),
    };
    let effective = if xx { bond_sum(Axis::X, strength, 2) } else { bond_sum(Axis::X, strength, 2) + bond_sum(Axis::Y, strength, 2) };
    let static_min = (c.static_cross() > 0.0).then_some(flux.margin.static_min);
    Ok(Plan {
        fluxes: vec![flux.signal.clone()],
        drives: Vec::new(),
        effective,
        f,
        strength,
        delta_min: flux.margin.delta_min,
        worst: flux.margin.worst_term.clone(),
        static_min,
        duration,
        notes: flux.notes,
    })
}

fn plan_rotation(chain: &ChainConfig, gate: &super::config::GateSection, guards: &CompileOptions) -> Result<Plan> {
    let probe: Vec<_> = chain.sites.iter().map(|s| compile_rotation(s, 1e-12 * s.gap(1, 0), 0.0, guards)).collect::<Result<_>>()?;
    let margin = probe.iter().map(|d| d.margin).fold(f64::INFINITY, f64::min);
    let r = gate.f.unwrap_or(gate.rwa_ratio * margin);
    let drives: Vec<_> = chain.sites.iter().map(|s| compile_rotation(s, r, 0.0, guards)).collect::<Result<_>>()?;
    let duration = gate.duration_s.unwrap_or(FRAC_PI_2 / r);
    Ok(Plan {
        fluxes: vec![FluxSignal::new(Vec::new()); chain.couplings.len()],
        drives: drives.into_iter().map(|d| d.tones).collect(),
        effective: field_sum_on(Axis::X, r, &[3, 3]),
        f: r,
        strength: r,
        delta_min: margin,
        worst: "drive off-resonant transition".into(),
        static_min: None,
        duration,
        notes: Vec::new(),
    })
}

/// Run one gate through the full model and compare with its effective form.
pub fn validate_gate(config: &ExperimentConfig, kind: GateTarget) -> Result<GateReport> {
    let chain = config.chain_config(2)?;
    let gate = &config.gate;
    let guards = gate.guards.unwrap_or_default();
    let plan = match kind {
        GateTarget::Xy => plan_flux(&chain, gate, &guards, false)?,
        GateTarget::Xx => plan_flux(&chain, gate, &guards, true)?,
        GateTarget::Rot => plan_rotation(&chain, gate, &guards)?,
    };
    let dims = chain.dims();
    let idx = spin1_indices(&dims);
    let dim = chain.dim();
    let mut x0 = CMatrix::zeros(dim, idx.len());
    for (k, &i) in idx.iter().enumerate() {
        x0[(i, k)] = C64::new(1.0, 0.0);
    }
    let period = std::f64::consts::TAU / plan.delta_min;
    let mut opts: PropagationOptions = config.propagation.clone();
    opts.sample_times = (0..CYCLE_SAMPLES).map(|j| plan.duration + period * j as f64 / CYCLE_SAMPLES as f64).collect();
    let generator = InteractionGenerator::flux_driven(&chain, &plan.fluxes, &plan.drives, gate.include_static)?;
    let (out, stats) = propagate_columns(&generator, x0.clone(), 0.0, &opts)?;
    let restrict = |m: &CMatrix| CMatrix::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], b)]);
    let full = &out[0];
    let block = restrict(full);
    let target = expm_hermitian(&plan.effective, plan.duration);
    let d = idx.len() as f64;
    let infidelity = 1.0 - average_gate_fidelity(&target, &block);
    let infidelity_cycle_mean = opts.sample_times
        .iter()
        .zip(&out)
        .map(|(&t, m)| 1.0 - average_gate_fidelity(&expm_hermitian(&plan.effective, t), &restrict(m)))
        .sum::<f64>()
        / CYCLE_SAMPLES as f64;
    let leakage = 1.0 - trace(&(block.adjoint() * &block)).re / d;

    let psi = haar_random_state(idx.len(), config.sampling.seed)?;
    let state_fidelity = {
        let want: CVector = &target * &psi;
        let got: CVector = &block * &psi;
        want.dotc(&got).norm()
    };

    let parity = chain.global_parity();
    let parity_drift = (0..idx.len())
        .map(|k| {
            let col = full.column(k);
            let after: f64 = col.iter().zip(&parity).map(|(a, p)| a.norm_sqr() * p).sum::<f64>() / col.norm_squared();
            (after - parity[idx[k]]).abs()
        })
        .fold(0.0, f64::max);

    let static_residual = if gate.report_static && chain.couplings[0].static_cross() > 0.0 {
        let silent = vec![FluxSignal::new(Vec::new()); chain.couplings.len()];
        let generator = InteractionGenerator::flux_driven(&chain, &silent, &[], true)?;
        let opts = PropagationOptions { sample_times: vec![plan.duration], ..opts.clone() };
        let (out, _) = propagate_columns(&generator, x0, 0.0, &opts)?;
        let block = CMatrix::from_fn(idx.len(), idx.len(), |a, b| out[0][(idx[a], b)]);
        Some(1.0 - average_gate_fidelity(&CMatrix::identity(idx.len(), idx.len()), &block))
    } else {
        None
    };

    let max_flux_excursion = plan.fluxes.iter().map(|s| s.max_excursion()).fold(0.0, f64::max);
    let linear_regime = plan.fluxes.iter().all(|s| s.within_linear_regime());
    let mut notes = plan.notes;
    if !gate.include_static {
        notes.push("static couplings excluded from the gate run; see static_residual".into());
    }
    Ok(GateReport {
        kind,
        f: plan.f,
        strength_rad_s: plan.strength,
        delta_min_rad_s: plan.delta_min,
        worst_term: plan.worst,
        rwa_ratio: plan.strength.abs() / plan.delta_min,
        duration_s: plan.duration,
        infidelity,
        infidelity_cycle_mean,
        leakage,
        state_fidelity,
        parity_drift,
        static_residual,
        static_min_rad_s: plan.static_min,
        max_flux_excursion,
        linear_regime,
        accepted_steps: stats.accepted,
        notes,
    })
}
