//! Propagation engine against analytic solutions and against itself.

mod common;

use common::{boltzmann, detailed_balance_errors, low_frequency_site, reference_site, relax};
use rabi_chain::dynamics::effective::effective_generator;
use rabi_chain::dynamics::{build_dissipators, propagate_columns, propagate_lindblad, propagate_unitary, BathRates, ChainState, ConstantGenerator, InteractionGenerator, Method, PropagationOptions, StateData};
use rabi_chain::experiment::ExperimentConfig;
use rabi_chain::linalg::{frobenius, projector, CMatrix, CVector, C64};
use rabi_chain::pulse::{compile_xy, CompileOptions};
use rabi_chain::spin1::{embed_state, exact_propagator, haar_random_state, model_hamiltonian, ModelKind, ModelSpec};

fn basis(dim: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[k] = C64::new(1.0, 0.0);
    v
}

/// A single excitation of |1⟩ at T = 0 can only fall to |0⟩, so its
/// population is exactly e^{−Γt} with Γ = ω₁₀ κ_c/ω_r |χ₁₀|².
#[test]
fn single_level_decays_exponentially() {
    let site = reference_site();
    let bath = BathRates { kappa_c: 1e7, kappa_x: 0.0, kappa_z: 0.0, temperature: 0.0 };
    let set = build_dissipators(std::slice::from_ref(&site), &bath).unwrap();
    let params = &site.species.params;
    let gamma = site.gap(1, 0) * bath.kappa_c / params.omega_r * site.chi()[(1, 0)].powi(2);
    let rho0 = ChainState::pure(basis(4, 1), vec![4]).unwrap();
    let generator = ConstantGenerator::new(&CMatrix::zeros(4, 4));
    let times: Vec<f64> = (1..=5).map(|k| k as f64 * 0.4 / gamma).collect();
    let traj = propagate_lindblad(&generator, Some(&set), &rho0, &PropagationOptions::default().with_samples(times.clone())).unwrap();
    for (sample, t) in traj.samples.iter().zip(&times) {
        let p = sample.state.populations();
        assert!((p[1] - (-gamma * t).exp()).abs() < 1e-8, "{} vs {}", p[1], (-gamma * t).exp());
        assert!((p[0] + p[1] - 1.0).abs() < 1e-9);
    }
}

#[test]
fn thermal_steady_state() {
    let steady = relax(&low_frequency_site(), &BathRates { kappa_c: 1e8, kappa_x: 1e7, kappa_z: 1e7, temperature: 0.015 });
    // the low-frequency site has Boltzmann factors of order 0.1 to 0.9
    assert!(boltzmann(steady.gaps[1], 0.015) > 0.5);
    let (_, rel) = detailed_balance_errors(&steady, 0.015);
    assert!(rel < 1e-6, "relative detailed-balance error {rel:.3e}");
    assert!(steady.max_trace_drift < 1e-8);
    assert!(steady.min_eig > -1e-6);
}

/// With no jump operators the master equation reduces to the Schrödinger
/// equation on |ψ⟩⟨ψ|.
#[test]
fn lindblad_without_bath_matches_unitary() {
    let cfg = ExperimentConfig::reference();
    let schedule = cfg.schedule().unwrap();
    let dims = vec![4, 4];
    let generator = effective_generator(&schedule, &dims, 0.0).unwrap();
    let psi = embed_state(&haar_random_state(9, 3).unwrap(), &dims);
    let samples = vec![schedule.total_duration_s * 0.3, schedule.total_duration_s];
    let opts = PropagationOptions::default().with_samples(samples);
    let pure = propagate_unitary(&generator, &ChainState::pure(psi.clone(), dims.clone()).unwrap(), &opts).unwrap();
    // density runs control the error per step, so their global error is a
    // few hundred times the tolerance
    let tight = PropagationOptions { abs_tol: 1e-12, rel_tol: 1e-12, ..opts.clone() };
    let mixed = propagate_lindblad(&generator, None, &ChainState::density(projector(&psi), dims).unwrap(), &tight).unwrap();
    for (a, b) in pure.samples.iter().zip(&mixed.samples) {
        let StateData::Pure(phi) = &a.state.data else { panic!("pure run returned a density") };
        let StateData::Density(rho) = &b.state.data else { panic!("density run returned a vector") };
        let gap = frobenius(&(projector(phi) - rho));
        assert!(gap < 1e-8, "{gap:.3e}");
    }
}

#[test]
fn constant_hamiltonian_matches_exponential() {
    let h = model_hamiltonian(&ModelSpec { kind: ModelKind::Heisenberg { lambda_x: 2e8, lambda_y: 2e8, lambda_z: 1e8 }, n_sites: 2 }).unwrap();
    let generator = ConstantGenerator::new(&h);
    let psi = haar_random_state(9, 5).unwrap();
    let t = 3e-8;
    for method in [Method::Rk4, Method::Magnus2] {
        let opts = PropagationOptions { method, max_step: (method == Method::Magnus2).then_some(1e-11), ..Default::default() }.with_samples(vec![t]);
        let traj = propagate_unitary(&generator, &ChainState::pure(psi.clone(), vec![3, 3]).unwrap(), &opts).unwrap();
        let StateData::Pure(got) = &traj.last().unwrap().data else { panic!() };
        let want = exact_propagator(&h, t).unwrap() * &psi;
        assert!((got - want).norm() < 1e-8, "{method:?}");
    }
}

fn short_xy_run(abs_tol: f64) -> (Vec<CMatrix>, Vec<f64>) {
    let cfg = ExperimentConfig::reference();
    let chain = cfg.chain_config(2).unwrap();
    let (a, b, c) = (&chain.sites[0], &chain.sites[1], &chain.couplings[0]);
    let probe = compile_xy(a, b, c, 0.0, &CompileOptions::default()).unwrap();
    let f = 0.05 * probe.margin.delta_min / c.q_left;
    let flux = compile_xy(a, b, c, f, &CompileOptions::default()).unwrap();
    let generator = InteractionGenerator::flux_driven(&chain, &[flux.signal], &[], true).unwrap();
    let dim = chain.dim();
    let x0 = CMatrix::identity(dim, dim);
    let opts = PropagationOptions { abs_tol, rel_tol: abs_tol, ..Default::default() }.with_samples(vec![2e-9]);
    let (out, _) = propagate_columns(&generator, x0, 0.0, &opts).unwrap();
    (out, chain.global_parity())
}

/// Flux tones and static couplings only ever connect levels of opposite
/// parity on both sites, so the global parity of every input is conserved.
#[test]
fn flux_evolution_conserves_parity_and_converges() {
    let (coarse, parity) = short_xy_run(1e-9);
    let u = &coarse[0];
    for k in 0..u.ncols() {
        let col = u.column(k);
        let drift: f64 = col.iter().zip(&parity).map(|(z, p)| z.norm_sqr() * p).sum::<f64>() / col.norm_squared() - parity[k];
        assert!(drift.abs() < 1e-12, "column {k}: {drift:.3e}");
    }
    let unitarity = frobenius(&(u.adjoint() * u - CMatrix::identity(u.nrows(), u.nrows())));
    assert!(unitarity < 1e-7);
    let (fine, _) = short_xy_run(5e-10);
    let change = (u - &fine[0]).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(change < 1e-7, "tolerance halving moved the result by {change:.3e}");
}

#[test]
fn coarse_max_step_is_refused() {
    let cfg = ExperimentConfig::reference();
    let chain = cfg.chain_config(2).unwrap();
    let flux = compile_xy(&chain.sites[0], &chain.sites[1], &chain.couplings[0], 1e-3, &CompileOptions::unchecked()).unwrap();
    let generator = InteractionGenerator::flux_driven(&chain, &[flux.signal], &[], false).unwrap();
    let opts = PropagationOptions { max_step: Some(1e-9), ..Default::default() }.with_samples(vec![1e-9]);
    let x0 = CMatrix::identity(16, 16);
    assert!(propagate_columns(&generator, x0, 0.0, &opts).is_err());
}
