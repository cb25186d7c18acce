use num_complex::Complex64;
use proptest::prelude::*;
use qsd_core::dilation::{
    build_isometry, build_isometry_generic, decompose_rank1, truncate, verify_dilation, verify_dilation_on,
    DEFAULT_RANK_TOL,
};
use qsd_core::linalg::{hermitian_eigh, trace_re};
use qsd_core::metrics::{joint_distribution, outcome_stats};
use qsd_core::random::{random_density, random_instance, random_povm};
use qsd_core::schemes::{solve_scheme, Scheme, SchemeConfig};
use qsd_core::solver::SolverSettings;
use qsd_core::states::{make_coherent_state, DepolarizingChannel, ProblemSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn depolarizing_keeps_states_valid(seed in any::<u64>(), qubits in 1usize..=3, lambda in 0.0f64..=1.0) {
        let dim = 1 << qubits;
        let mut r = rng(seed);
        let rho = random_density(&mut r, dim, 1 + (seed as usize) % dim).unwrap();
        let out = DepolarizingChannel::new(lambda, dim).unwrap().apply(&rho).unwrap();
        let m = out.matrix();
        prop_assert!((m - m.adjoint()).norm() <= 1e-12);
        prop_assert!((trace_re(m) - 1.0).abs() <= 1e-12);
        let (values, _) = hermitian_eigh(m).unwrap();
        prop_assert!(values[0] >= -1e-12);
    }

    #[test]
    fn coherent_states_are_normalized(re in -3.0f64..3.0, im in -3.0f64..3.0, qubits in 1usize..=6) {
        let psi = make_coherent_state(Complex64::new(re, im), qubits).unwrap();
        prop_assert!((psi.amplitudes().norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn joint_distribution_of_complete_povm_sums_to_one(
        seed in any::<u64>(),
        qubits in 1usize..=3,
        k in 2usize..=4,
        lambda in 0.0f64..=1.0,
    ) {
        let dim = 1 << qubits;
        let mut r = rng(seed);
        let states = (0..k).map(|_| random_density(&mut r, dim, dim).unwrap()).collect();
        let spec = ProblemSpec::new(states, vec![1.0 / k as f64; k], 0.0).unwrap();
        let povm = random_povm(&mut r, dim, k).unwrap();
        let jd = joint_distribution(&spec, &povm, lambda).unwrap();
        prop_assert!((jd.total() - 1.0).abs() <= 1e-8);
        let s = outcome_stats(&jd);
        prop_assert!((s.p_succ + s.p_err + s.p_inc - jd.total()).abs() <= 1e-10);
    }

    #[test]
    fn minimal_dilation_is_exact_and_no_larger_than_generic(
        seed in any::<u64>(),
        qubits in 1usize..=3,
        k in 2usize..=4,
    ) {
        let povm = random_povm(&mut rng(seed), 1 << qubits, k).unwrap();
        let dil = build_isometry(&decompose_rank1(&povm, DEFAULT_RANK_TOL).unwrap()).unwrap();
        let report = verify_dilation(&dil, &povm, 10, seed).unwrap();
        prop_assert!(report.isometry_error <= 1e-10);
        prop_assert!(report.max_probability_deviation <= 1e-10);
        prop_assert!(dil.target_dim() <= build_isometry_generic(&povm).unwrap().target_dim());
    }

    #[test]
    fn truncation_error_within_discarded_weight(seed in any::<u64>(), delta in 0.0f64..0.3) {
        let mut r = rng(seed);
        let povm = random_povm(&mut r, 4, 3).unwrap();
        let dec = decompose_rank1(&povm, DEFAULT_RANK_TOL).unwrap();
        let cut = truncate(&dec, delta).unwrap();
        let discarded: f64 = dec.terms.iter().filter(|t| t.sigma < delta).map(|t| t.sigma).sum();
        let states: Vec<_> = (0..5).map(|_| random_density(&mut r, 4, 4).unwrap()).collect();
        let dil = build_isometry(&cut).unwrap();
        let report = verify_dilation_on(&dil, &povm, &states).unwrap();
        prop_assert!(report.max_probability_deviation <= discarded + 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn decoded_povms_are_valid(seed in any::<u64>(), lambda in prop::sample::select(vec![0.0, 0.05, 0.3])) {
        let spec = random_instance(&mut rng(seed), 4, 2).unwrap();
        for scheme in [Scheme::Med, Scheme::MedPlus, Scheme::Uqsd] {
            let sol = solve_scheme(&spec, &SchemeConfig::new(scheme, lambda), &SolverSettings::default()).unwrap();
            prop_assert!(sol.povm.completeness_error() <= 1e-9);
            for m in sol.povm.elements() {
                prop_assert!(hermitian_eigh(m).unwrap().0[0] >= -1e-9);
            }
        }
    }

    #[test]
    fn solving_is_deterministic(seed in any::<u64>()) {
        let spec = random_instance(&mut rng(seed), 3, 2).unwrap();
        let config = SchemeConfig::new(Scheme::Med, 0.05);
        let a = solve_scheme(&spec, &config, &SolverSettings::default()).unwrap();
        let b = solve_scheme(&spec, &config, &SolverSettings::default()).unwrap();
        prop_assert_eq!(a.solution.x, b.solution.x);
        prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}
