use std::sync::Arc;

use nelson_ibc::ibc::{
    check_a_independence, check_adjointness, check_h_independence, check_h_symmetry, check_l_g_identity,
    check_one_minus_g_identity, check_t_difference_identity,
};
use nelson_ibc::spectral::{lowest_eigenvalues, EigenOptions};
use nelson_ibc::{build_grid, FockSpace, FockVector, GridScheme, IbcConfig, IbcOperators, Model};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn space(m: usize, lambda: f64, angular: usize, n_max: usize, mass: f64) -> Arc<FockSpace> {
    let grid = build_grid(m, lambda, GridScheme::GaussLegendre).unwrap();
    let model = if mass == 0.0 {
        Model::nelson_massless()
    } else {
        Model::nelson(mass)
    };
    Arc::new(FockSpace::s_wave(&model, &grid, angular, n_max).unwrap())
}

fn small_space() -> impl Strategy<Value = Arc<FockSpace>> {
    (
        2usize..7,
        1.0f64..16.0,
        1usize..4,
        1usize..3,
        prop_oneof![Just(0.0), 0.1f64..2.0],
    )
        .prop_map(|(m, l, a, n, mass)| space(m, l, a, n, mass))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn structural_identities(s in small_space(), mu in 1.0f64..50.0, lam in 1.0f64..50.0, seed in 0u64..1000) {
        let cm = IbcConfig::new(mu).unwrap();
        let cl = IbcConfig::new(lam).unwrap();
        prop_assert!(check_l_g_identity(&s, cm, 3, seed).unwrap() <= 1e-13);
        prop_assert!(check_adjointness(&s, cm, 3, seed).unwrap() <= 1e-12);
        prop_assert!(check_h_symmetry(&s, cm, 3, seed).unwrap() <= 1e-10);
        prop_assert!(check_t_difference_identity(&s, cm, cl, 3, seed).unwrap() <= 1e-8);
        prop_assert!(check_one_minus_g_identity(&s, cm, cl, 3, seed).unwrap() <= 1e-10);
        prop_assert!(check_a_independence(&s, cm, cl, 3, seed).unwrap() <= 1e-8);
        prop_assert!(check_h_independence(&s, cm, cl, 3, seed).unwrap() <= 1e-10);
    }

    #[test]
    fn g_pairs_with_l_as_minus_annihilation(s in small_space(), mu in 1.0f64..20.0, seed in 0u64..1000) {
        let ops = IbcOperators::new(&s, IbcConfig::new(mu).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = FockVector::random(&s, &mut rng);
        let psi = FockVector::random(&s, &mut rng);
        let lhs = ops.apply_g(&phi).dot(&ops.apply_free(&psi));
        let rhs = -phi.dot(&ops.apply_annihilation(&psi));
        let scale = ops.apply_g(&phi).norm() * ops.apply_free(&psi).norm();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
    }

    #[test]
    fn h_is_bounded_below_by_its_ground_energy(s in small_space(), seed in 0u64..1000) {
        let ops = Arc::new(IbcOperators::new(&s, IbcConfig::new(1.0).unwrap()).unwrap());
        let e0 = lowest_eigenvalues(&ops.h_handle(), 1, 1e-10).unwrap().ground_energy();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..5 {
            let psi = FockVector::random(&s, &mut rng);
            let q = psi.dot(&ops.apply_h(&psi));
            prop_assert!(q >= e0 * psi.dot(&psi) - 1e-8 * q.abs().max(1.0));
        }
    }

    #[test]
    fn g_norm_is_nonincreasing_in_mu(s in small_space(), mu in 1.0f64..10.0, factor in 1.5f64..10.0) {
        let lo = nelson_ibc::ibc::g_norm_estimate(&s, IbcConfig::new(mu).unwrap(), 1e-12).unwrap();
        let hi = nelson_ibc::ibc::g_norm_estimate(&s, IbcConfig::new(mu * factor).unwrap(), 1e-12).unwrap();
        prop_assert!(hi.norm <= lo.norm * (1.0 + 1e-9));
    }
}

#[test]
fn h_lambda_ground_energy_decreases_with_cutoff() {
    let s = space(12, 16.0, 4, 2, 0.0);
    let opts = EigenOptions::default();
    let mut previous = f64::INFINITY;
    for l in [1.0, 2.0, 4.0, 8.0, 16.0] {
        let h = nelson_ibc::build_h_lambda(&s, l).unwrap();
        let e = nelson_ibc::lowest_eigenpairs(&h, &opts).unwrap().ground_energy();
        assert!(e <= previous + 1e-9, "Lambda {l}: {e} > {previous}");
        previous = e;
    }
}

#[test]
fn truncating_the_boson_number_raises_the_ground_energy() {
    let opts = EigenOptions::default();
    let e = |n_max| {
        let s = space(8, 8.0, 3, n_max, 0.0);
        let h = nelson_ibc::build_h_lambda(&s, 8.0).unwrap();
        nelson_ibc::lowest_eigenpairs(&h, &opts).unwrap().ground_energy()
    };
    assert!(e(2) <= e(1) + 1e-9);
}
