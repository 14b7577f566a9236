use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sbp_core::propagator::{self, Sign};
use sbp_core::spectral;
use sbp_core::verify::{random_smooth_field, run_identity_suite, VerifyConfig};
use sbp_core::{ComplexField, GridSpec, SbpError, Space};

fn gaussian(g: GridSpec, c: [f64; 2]) -> ComplexField {
    ComplexField::from_fn(g, |x| {
        let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
        Complex64::new((-r2 / 2.0).exp(), 0.0)
    })
}

#[test]
fn identity_suite_on_reference_grid() {
    let cfg = VerifyConfig {
        dim: 2,
        n: 256,
        box_length: 64.0,
        t: 2.0,
        gamma: 1.5,
        seed: 7,
        samples: 3,
        gaussian_center: vec![8.0, 6.0],
    };
    let r = run_identity_suite(&cfg).unwrap();
    assert!(r.j_routes <= 1e-10, "{r:?}");
    assert!(r.j_power_routes <= 1e-5, "{r:?}");
    assert!(r.factorization <= 1e-6, "{r:?}");
    assert!(r.j_norm_identity <= 1e-6, "{r:?}");
    assert!(r.j_power_norm_identity <= 1e-12, "{r:?}");
    assert!(r.j_square <= 1e-8, "{r:?}");
    assert!(r.unitarity <= 1e-12 && r.semigroup <= 1e-12, "{r:?}");
}

#[test]
fn spreading_gaussian_closed_form() {
    // e^{-|x|^2/4} evolves to e^{-|x|^2/4(1+it)} / (1+it) in 2D
    let g = GridSpec::new(2, 256, 64.0).unwrap();
    let u0 = ComplexField::from_fn(g, |x| Complex64::new((-(x[0] * x[0] + x[1] * x[1]) / 4.0).exp(), 0.0));
    let u1 = propagator::free_propagate(&u0, 1.0).unwrap();
    let z = Complex64::new(1.0, 1.0);
    let exact = ComplexField::from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1]) / (4.0 * z)).exp() / z);
    assert!(exact.rel_l2_distance(&u1).unwrap() < 1e-8);
}

#[test]
fn factorization_zero_and_localization() {
    let g = GridSpec::new(2, 64, 32.0).unwrap();
    let z = ComplexField::zeros(g, Space::Physical);
    assert_eq!(propagator::mdfm_factorization_check(&z, 2.0).unwrap().relative_l2, 0.0);
    let edge = gaussian(g, [13.0, 0.0]);
    assert!(matches!(
        propagator::mdfm_factorization_check(&edge, 2.0),
        Err(SbpError::NotLocalized { .. })
    ));
}

#[test]
fn factorization_improves_with_resolution() {
    // finer spacing and a larger box together
    let devs: Vec<f64> = [(64, 32.0), (128, 48.0), (256, 64.0), (512, 96.0)]
        .iter()
        .map(|&(n, l)| {
            let g = GridSpec::new(2, n, l).unwrap();
            propagator::mdfm_factorization_check(&gaussian(g, [1.0, -2.0]), 2.0)
                .unwrap()
                .relative_l2
        })
        .collect();
    assert!(devs.windows(2).all(|w| w[1] < w[0]), "{devs:?}");
    assert!(devs[2] < 1e-6);
}

#[test]
fn dilation_is_unitary_and_inverted() {
    let g = GridSpec::new(2, 256, 64.0).unwrap();
    let u = gaussian(g, [1.0, 0.5]);
    let d = propagator::dilation(&u, 2.0).unwrap();
    assert!((d.l2_norm() - u.l2_norm()).abs() < 1e-6 * u.l2_norm());
    let back = propagator::dilation_inverse(&d, 2.0).unwrap();
    assert!(u.rel_l2_distance(&back).unwrap() < 1e-6);
}

#[test]
fn gamma_zero_power_is_identity() {
    let g = GridSpec::new(2, 64, 32.0).unwrap();
    let u = gaussian(g, [0.0, 1.0]);
    let v = propagator::j_power(&u, 1.5, 0.0).unwrap();
    assert!(u.rel_linf_distance(&v).unwrap() < 1e-12);
    assert!(propagator::j_power(&u, 0.0, 1.0).is_err());
    assert!(propagator::j_power(&u, 1.0, -1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn galilean_routes_agree(seed in 0u64..10_000, t in 1.5f64..6.0) {
        let g = GridSpec::new(2, 128, 32.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_smooth_field(&g, &mut rng, 3);
        prop_assert!(propagator::galilean_route_deviation(&u, t).unwrap() <= 1e-10);
    }

    #[test]
    fn free_flow_unitary_and_semigroup(seed in 0u64..10_000, s in -3.0f64..3.0, t in -3.0f64..3.0) {
        let g = GridSpec::new(2, 64, 24.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_smooth_field(&g, &mut rng, 3);
        let a = propagator::free_propagate(&u, t).unwrap();
        prop_assert!((a.l2_norm() - u.l2_norm()).abs() <= 1e-12 * u.l2_norm());
        let two = propagator::free_propagate(&propagator::free_propagate(&u, s).unwrap(), t).unwrap();
        let one = propagator::free_propagate(&u, s + t).unwrap();
        prop_assert!(one.rel_l2_distance(&two).unwrap() <= 1e-12);
    }

    #[test]
    fn gauge_is_pointwise_unitary(seed in 0u64..10_000, t in 0.1f64..5.0) {
        let g = GridSpec::new(2, 32, 12.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_smooth_field(&g, &mut rng, 2);
        let p = propagator::gauge_m(&u, t, Sign::Plus).unwrap();
        let back = propagator::gauge_m(&p, t, Sign::Minus).unwrap();
        prop_assert!(u.rel_linf_distance(&back).unwrap() < 1e-15);
        for (a, b) in p.values().iter().zip(u.values()) {
            prop_assert!((a.norm() - b.norm()).abs() <= 1e-15 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn j_power_norm_is_gauge_free(seed in 0u64..10_000, t in 1.5f64..4.0, gamma in 0.0f64..2.5) {
        let g = GridSpec::new(2, 128, 32.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_smooth_field(&g, &mut rng, 2);
        let a = propagator::j_power(&u, t, gamma).unwrap().l2_norm();
        let inner = propagator::gauge_m(&u, t, Sign::Minus).unwrap();
        let b = spectral::fractional_op(&inner, gamma, spectral::FractionalKind::Laplacian).unwrap().l2_norm()
            * (2.0 * t).powf(gamma);
        prop_assert!((a - b).abs() <= 1e-12 * a.max(b));
    }
}
