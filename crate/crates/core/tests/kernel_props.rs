use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparsebss_core::kernel::{
    cubic_positive_root, eigh, inv_psd, inverse, logdet_psd, riccati_solve, sqrt_psd, CMatrix, Lu,
};

fn random_matrix(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// `G G^H + eps I`, well away from singular.
fn random_pd(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    let g = random_matrix(rng, dim);
    let mut p = &g * &g.adjoint();
    p.add_diag(0.1);
    p.hermitize();
    p
}

fn pd_strategy() -> impl Strategy<Value = CMatrix> {
    (2usize..=4, any::<u64>()).prop_map(|(d, s)| random_pd(&mut ChaCha8Rng::seed_from_u64(s), d))
}

#[test]
fn riccati_residual_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let dim = 2 + i % 3;
        let a = random_pd(&mut rng, dim);
        let b = random_pd(&mut rng, dim);
        let r = riccati_solve(&a, &b).unwrap();
        let res = (&(&(&r * &a) * &r) - &b).frobenius_norm() / b.frobenius_norm();
        worst = worst.max(res);
    }
    assert!(worst < 1e-8, "worst relative residual {worst:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn hermitian_results_stay_hermitian(a in pd_strategy(), b in pd_strategy()) {
        prop_assume!(a.dim() == b.dim());
        for m in [inv_psd(&a).unwrap(), sqrt_psd(&a).unwrap(), riccati_solve(&a, &b).unwrap()] {
            prop_assert!(m.hermitian_defect() <= 1e-12 * m.frobenius_norm());
        }
    }

    #[test]
    fn inverse_of_inverse(a in pd_strategy()) {
        let back = inv_psd(&inv_psd(&a).unwrap()).unwrap();
        prop_assert!((&back - &a).frobenius_norm() < 1e-9 * a.frobenius_norm());
        let lu = inverse(&a).unwrap();
        prop_assert!((&lu - &inv_psd(&a).unwrap()).frobenius_norm() < 1e-9 * lu.frobenius_norm());
    }

    #[test]
    fn logdet_agrees_with_lu(a in pd_strategy()) {
        let via_lu = Lu::new(&a).unwrap().log_abs_det();
        prop_assert!((logdet_psd(&a).unwrap() - via_lu).abs() < 1e-9 * via_lu.abs().max(1.0));
    }

    #[test]
    fn sqrt_squares_back(a in pd_strategy()) {
        let s = sqrt_psd(&a).unwrap();
        prop_assert!((&(&s * &s) - &a).frobenius_norm() < 1e-10 * a.frobenius_norm());
    }

    #[test]
    fn eigen_reconstructs(a in pd_strategy()) {
        let e = eigh(&a).unwrap();
        let back = e.reconstruct_with(|v| v);
        prop_assert!((&back - &a).frobenius_norm() < 1e-12 * a.frobenius_norm().max(1.0));
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn cubic_root_satisfies_equation(c3 in 1e-3f64..10.0, c2 in 0.0f64..100.0, c0 in -1e3f64..-1e-6) {
        let w = cubic_positive_root(c3, c2, c0).unwrap();
        prop_assert!(w > 0.0);
        let res = c3 * w.powi(3) + c2 * w * w + c0;
        prop_assert!(res.abs() < 1e-9 * c0.abs().max(1.0));
    }

    #[test]
    fn cubic_root_grows_with_data_term(c3 in 1e-2f64..10.0, c2 in 0.0f64..10.0, c0 in 1e-4f64..1e2, extra in 1e-3f64..1e2) {
        let lo = cubic_positive_root(c3, c2, -c0).unwrap();
        let hi = cubic_positive_root(c3, c2, -(c0 + extra)).unwrap();
        prop_assert!(hi > lo);
    }
}
