use proptest::prelude::*;
use rabi_chain::linalg::{commutator, frobenius, to_complex, CMatrix, C64};
use rabi_chain::pulse::{couplings_from_lambdas, lambdas_from_couplings, schedule_heisenberg};
use rabi_chain::spectrum::{build_rabi_hamiltonian, chi_elements, parity_diagonal, solve, QrsParams, Species};
use rabi_chain::spin1::{haar_random_state, pure_fidelity, uhlmann_fidelity};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Parity commutes with the Rabi Hamiltonian and the field only connects
    /// levels of opposite parity, for any coupling.
    #[test]
    fn rabi_parity_selection_rule(g in 0.0f64..1.2, wq in 0.3f64..1.5) {
        let params = QrsParams::new(wq, 1.0, g, 30, Species::A);
        let h = to_complex(&build_rabi_hamiltonian(&params).unwrap());
        let pi = CMatrix::from_diagonal(&parity_diagonal(30).map(|p| C64::new(p, 0.0)));
        prop_assert!(frobenius(&commutator(&h, &pi)) < 1e-10 * frobenius(&h));
        let spectrum = solve(&params, 4).unwrap();
        let chi = chi_elements(&spectrum).unwrap();
        for k in 0..4 {
            prop_assert!(spectrum.energies[k] <= spectrum.energies.get(k + 1).copied().unwrap_or(f64::INFINITY));
            for j in 0..4 {
                if spectrum.parity(k) == spectrum.parity(j) {
                    prop_assert!(chi[(k, j)].abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn coupling_map_round_trips(xy in 0.0f64..2.0, yz in 0.0f64..2.0, zx in 0.0f64..2.0) {
        let lambdas = lambdas_from_couplings(xy, yz, zx);
        let (a, b, c) = couplings_from_lambdas(lambdas).unwrap();
        prop_assert!((a - xy).abs() < 1e-12 && (b - yz).abs() < 1e-12 && (c - zx).abs() < 1e-12);
    }

    /// Seven segments per step: three gates of t/n_o and four π/2 rotations.
    #[test]
    fn schedule_duration_is_closed_form(t in 1e-9f64..1e-6, n in 1usize..50, r in 1e7f64..1e9) {
        let s = schedule_heisenberg(t, n, 1.0, 2.0, 3.0, r).unwrap();
        prop_assert_eq!(s.segments.len(), 7 * n);
        let want = 3.0 * t + 4.0 * n as f64 * std::f64::consts::FRAC_PI_2 / r;
        prop_assert!((s.total_duration_s - want).abs() < 1e-12 * want);
        let sum: f64 = s.segments.iter().map(|g| g.duration_s).sum();
        prop_assert!((sum - s.total_duration_s).abs() < 1e-12 * want);
    }

    #[test]
    fn uhlmann_matches_overlap_for_pure_states(a in 0u64..1000, b in 0u64..1000, w in 0.0f64..1.0) {
        let psi = haar_random_state(9, a).unwrap();
        let phi = haar_random_state(9, b + 1000).unwrap();
        let chi = haar_random_state(9, b + 5000).unwrap();
        let sigma = &phi * phi.adjoint() * C64::new(w, 0.0) + &chi * chi.adjoint() * C64::new(1.0 - w, 0.0);
        let rho = &psi * psi.adjoint();
        prop_assert!((uhlmann_fidelity(&rho, &sigma).unwrap() - pure_fidelity(&psi, &sigma)).abs() < 1e-10);
    }
}
