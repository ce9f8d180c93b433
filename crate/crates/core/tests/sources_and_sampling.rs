use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qsource::measurement::{
    cylinder_measure, cylinder_measure_by_transfer, sample_messages, transfer_prefix, TransferEngine,
};
use qsource::sources::{verify_consistency, verify_positivity, CONSISTENCY_TOL};
use qsource::{DensityMatrix, Pom, SourceFamily};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pauli_families_are_consistent(a in -0.6f64..0.6, b in -0.1f64..0.1, c in -0.1f64..0.1) {
        let f = SourceFamily::pauli_r(a, b, c).unwrap();
        let report = verify_consistency(&f, 5).unwrap();
        prop_assert!(report.passed(CONSISTENCY_TOL), "worst {}", report.worst());
    }

    #[test]
    fn cylinder_measures_are_marginally_consistent(
        seed in any::<u64>(),
        a in -0.5f64..0.5,
        b in -0.05f64..0.05,
        c in -0.05f64..0.05,
        r in 2usize..4,
    ) {
        let f = SourceFamily::pauli_r(a, b, c).unwrap();
        let pom = Pom::random_generic(2, r, &mut ChaCha8Rng::seed_from_u64(seed));
        let mut prev = cylinder_measure(&f, &pom, 1).unwrap();
        prop_assert!((prev.total() - 1.0).abs() < 1e-12);
        for n in 2..=4 {
            let m = cylinder_measure(&f, &pom, n).unwrap();
            prop_assert!(m.probs().iter().all(|&p| p >= 0.0));
            prop_assert!(m.marginal_residual(&prev) < 1e-12);
            prev = m;
        }
    }

    #[test]
    fn transfer_matches_dense(seed in any::<u64>(), n in 1usize..6) {
        let f = SourceFamily::pauli_r(0.2, 0.04, -0.03).unwrap();
        let pom = Pom::random_generic(2, 3, &mut ChaCha8Rng::seed_from_u64(seed));
        let dense = cylinder_measure(&f, &pom, n).unwrap();
        let transfer = cylinder_measure_by_transfer(&f, &pom, n).unwrap();
        for (x, y) in dense.probs().iter().zip(transfer.probs()) {
            prop_assert!((x - y).abs() <= 1e-10 * x.abs() + 1e-15);
        }
    }

    #[test]
    fn cylinder_with_free_positions_sums_out(seed in any::<u64>()) {
        let f = SourceFamily::pauli_r(-0.1, 0.03, 0.02).unwrap();
        let pom = Pom::random_projective(2, &mut ChaCha8Rng::seed_from_u64(seed));
        let engine = TransferEngine::new(&f, &pom).unwrap();
        let m = cylinder_measure(&f, &pom, 3).unwrap();
        for x0 in 0..2 {
            for x2 in 0..2 {
                let summed: f64 = (0..2).map(|x1| m.prob(&[x0, x1, x2]).unwrap()).sum();
                let direct = engine.cylinder_probability(&[(0, x0), (2, x2)]).unwrap();
                prop_assert!((summed - direct).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn certified_pauli_sources_stay_positive() {
    for (a, b, c) in [(0.0, 0.05, 0.05), (0.5, 0.02, -0.01), (-0.4, -0.03, 0.03)] {
        let f = SourceFamily::pauli_r(a, b, c).unwrap();
        assert!(verify_positivity(&f, 7).unwrap().passed());
    }
}

#[test]
fn transfer_prefix_probability_of_empty_word() {
    let f = SourceFamily::pauli_r(0.3, 0.05, 0.05).unwrap();
    let pom = Pom::computational(2);
    assert!((transfer_prefix(&f, &pom, &[]).unwrap().probability() - 1.0).abs() < 1e-15);
}

/// Symbol and pair frequencies of sampled messages sit within 3σ of the
/// exact cylinder probabilities.
#[test]
fn sampled_frequencies_within_three_sigma() {
    let rho = DensityMatrix::from_diagonal(&[0.75, 0.25]).unwrap();
    let cases = [
        SourceFamily::bernoulli(rho),
        SourceFamily::pauli_r(0.3, 0.05, 0.05).unwrap(),
    ];
    let count = 4000;
    for f in &cases {
        let pom = Pom::computational(2);
        let set = sample_messages(f, &pom, 6, count, 99).unwrap();
        for k in 1..=2 {
            let exact = cylinder_measure(f, &pom, k).unwrap();
            let freq = set.prefix_frequencies(k);
            for (p, q) in exact.probs().iter().zip(&freq) {
                let sigma = (p * (1.0 - p) / count as f64).sqrt();
                assert!((p - q).abs() <= 3.0 * sigma + 1e-12, "k={k} p={p} freq={q}");
            }
        }
    }
}

#[test]
fn sampling_is_deterministic_per_seed() {
    let f = SourceFamily::pauli_r(0.3, 0.05, 0.05).unwrap();
    let pom = Pom::computational(2);
    let a = sample_messages(&f, &pom, 20, 50, 5).unwrap();
    let b = sample_messages(&f, &pom, 20, 50, 5).unwrap();
    assert_eq!(a.messages, b.messages);
    let c = sample_messages(&f, &pom, 20, 50, 6).unwrap();
    assert_ne!(a.messages, c.messages);
}
