use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qsource::entropy::{klein_gap, von_neumann};
use qsource::linalg::{kron, HermitianMatrix};
use qsource::measurement::{jensen_bound_check, quantum_bound_check};
use qsource::random;
use qsource::{DensityMatrix, Pom, SourceFamily};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn families() -> Vec<SourceFamily> {
    let rho = DensityMatrix::from_diagonal(&[0.75, 0.25]).unwrap();
    vec![
        SourceFamily::bernoulli(rho.clone()),
        SourceFamily::commuting_r(rho).unwrap(),
        SourceFamily::pauli_r(0.3, 0.05, 0.05).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn klein_gap_is_non_negative(seed in any::<u64>(), dim in 2usize..9) {
        let mut r = rng(seed);
        let a = HermitianMatrix::new(random::psd(dim, &mut r)).unwrap();
        let b = HermitianMatrix::new(random::psd(dim, &mut r)).unwrap();
        prop_assert!(klein_gap(&a, &b).unwrap() >= -1e-9);
        prop_assert!(klein_gap(&a, &a).unwrap().abs() < 1e-9);
    }

    #[test]
    fn jensen_margin_is_non_negative(seed in any::<u64>(), dim in 2usize..5, extra in 0usize..3) {
        let mut r = rng(seed);
        let rho = DensityMatrix::new(random::density(dim, &mut r)).unwrap();
        let pom = if extra == 0 {
            Pom::random_projective(dim, &mut r)
        } else {
            Pom::random_generic(dim, dim + extra, &mut r)
        };
        prop_assert!(jensen_bound_check(&rho, &pom).unwrap() >= -1e-9);
    }

    #[test]
    fn subadditivity_on_random_bipartite_states(seed in any::<u64>(), da in 2usize..4, db in 2usize..4) {
        use qsource::linalg::{partial_trace, TraceSide};
        let mut r = rng(seed);
        let m = random::density(da * db, &mut r);
        let whole = von_neumann(&DensityMatrix::new(m.clone()).unwrap()).unwrap();
        let a = partial_trace(&m, (da, db), TraceSide::Trailing).unwrap();
        let b = partial_trace(&m, (da, db), TraceSide::Leading).unwrap();
        let sa = von_neumann(&DensityMatrix::new(a).unwrap()).unwrap();
        let sb = von_neumann(&DensityMatrix::new(b).unwrap()).unwrap();
        prop_assert!(whole <= sa + sb + 1e-9);
    }

    #[test]
    fn entropy_is_additive_on_products(seed in any::<u64>(), da in 2usize..4, db in 2usize..4) {
        let mut r = rng(seed);
        let a = random::density(da, &mut r);
        let b = random::density(db, &mut r);
        let s = |m| von_neumann(&DensityMatrix::new(m).unwrap()).unwrap();
        let joint = s(kron(&a, &b));
        prop_assert!((joint - s(a) - s(b)).abs() < 1e-10);
    }

    #[test]
    fn measured_entropy_bound(seed in any::<u64>(), which in 0usize..3, n in 1usize..5, generic in any::<bool>()) {
        let mut r = rng(seed);
        let f = &families()[which];
        let pom = if generic { Pom::random_generic(2, 3, &mut r) } else { Pom::random_projective(2, &mut r) };
        prop_assert!(quantum_bound_check(f, &pom, n).unwrap().margin >= -1e-9);
    }
}
