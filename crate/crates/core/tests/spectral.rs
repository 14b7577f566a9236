mod common;

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sbp_core::fft::{fft, ifft};
use sbp_core::spectral::{self, FractionalKind, Multiplier};
use sbp_core::verify::random_smooth_field;
use sbp_core::{ComplexField, GridSpec, Space};

fn gaussian(g: GridSpec) -> ComplexField {
    ComplexField::from_fn(g, |x| Complex64::new((-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0).exp(), 0.0))
}

#[test]
fn grid_examples() {
    let g = GridSpec::new(2, 8, 16.0).unwrap();
    assert_eq!(g.spacing(), 2.0);
    assert!((g.freq_spacing() - PI / 8.0).abs() < 1e-15);
    let g = GridSpec::new(3, 8, 8.0).unwrap();
    assert_eq!(g.len(), 512);
    assert_eq!(g.cell_volume(), 1.0);
    assert!(GridSpec::new(2, 7, 16.0).is_err());
    assert!(GridSpec::new(4, 8, 16.0).is_err());
}

#[test]
fn gaussian_transform_constant() {
    // 1D check of the normalization: (2 pi)^{-1/2} int e^{-x^2/2} cos(xi x) dx = e^{-xi^2/2}
    for xi in [0.0, 0.5, 1.3, 2.7] {
        let q = (2.0 * PI).powf(-0.5) * common::integrate(|x| (-x * x / 2.0).exp() * (xi * x).cos(), -40.0, 40.0, 1e-13);
        assert!((q - (-xi * xi / 2.0f64).exp()).abs() < 1e-11, "xi={xi}: {q}");
    }
    let g = GridSpec::new(2, 256, 32.0).unwrap();
    let hat = fft(&gaussian(g)).unwrap();
    let exact = ComplexField::from_frequency_fn(g, |xi| Complex64::new((-(xi[0] * xi[0] + xi[1] * xi[1]) / 2.0).exp(), 0.0));
    let err = hat
        .values()
        .iter()
        .zip(exact.values())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-8, "{err:e}");
}

#[test]
fn zero_and_roundtrip() {
    let g = GridSpec::new(2, 32, 10.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let u = random_smooth_field(&g, &mut rng, 3);
    let back = ifft(&fft(&u).unwrap()).unwrap();
    assert!(u.rel_linf_distance(&back).unwrap() < 1e-12);
    assert!(fft(&back).is_ok());
    let z = ComplexField::zeros(g, Space::Physical);
    let r = spectral::norms(&z, 1.5, Some(4.0)).unwrap();
    assert_eq!((r.l2, r.linf, r.sobolev_gamma, r.weighted_gamma, r.lp.unwrap().1), (0.0, 0.0, 0.0, 0.0, 0.0));
    assert_eq!(spectral::fractional_op(&z, 0.7, FractionalKind::Bessel).unwrap().linf_norm(), 0.0);
}

#[test]
fn identity_multipliers() {
    let g = GridSpec::new(2, 32, 10.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let u = random_smooth_field(&g, &mut rng, 3);
    let ones = vec![1.0; g.len()];
    assert!(spectral::apply_multiplier(&u, Multiplier::Real(&ones)).unwrap().rel_linf_distance(&u).unwrap() < 1e-12);
    let b0 = spectral::fractional_op(&u, 0.0, FractionalKind::Bessel).unwrap();
    assert!(b0.rel_linf_distance(&u).unwrap() < 1e-12);
}

#[test]
fn gaussian_l2_norm() {
    let g = GridSpec::new(2, 256, 32.0).unwrap();
    let r = spectral::norms(&gaussian(g), 1.5, None).unwrap();
    assert!((r.l2 - PI.sqrt()).abs() < 1e-8);
}

#[test]
fn bessel_power_matches_radial_quadrature() {
    let g = GridSpec::new(2, 256, 32.0).unwrap();
    let v = spectral::fractional_op(&gaussian(g), 1.5, FractionalKind::Bessel).unwrap();
    for ix in [[128usize, 128], [131, 128], [140, 133], [150, 100]] {
        let idx = g.flatten([ix[0], ix[1], 0]);
        let x = g.point(idx);
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let oracle = common::integrate(
            |rho| (1.0 + rho * rho).powf(0.75) * (-rho * rho / 2.0).exp() * common::bessel_j0(rho * r) * rho,
            0.0,
            14.0,
            1e-12,
        );
        let got = v.values()[idx];
        assert!((got.re - oracle).abs() < 1e-6 && got.im.abs() < 1e-10, "r={r}: {got} vs {oracle}");
    }
}

#[test]
fn weighted_sobolev_norm_matches_quadrature() {
    let g = GridSpec::new(2, 256, 32.0).unwrap();
    let r = spectral::norms(&gaussian(g), 1.5, None).unwrap();
    let sob = (2.0 * PI * common::integrate(|p| (1.0 + p * p).powf(1.5) * (-p * p).exp() * p, 0.0, 12.0, 1e-13)).sqrt();
    let wtd = (2.0 * PI * common::integrate(|s| s.powi(3) * (-s * s).exp() * s, 0.0, 12.0, 1e-13)).sqrt();
    assert!((r.sobolev_gamma - sob).abs() < 1e-6, "{} vs {sob}", r.sobolev_gamma);
    assert!((r.weighted_gamma - wtd).abs() < 1e-6, "{} vs {wtd}", r.weighted_gamma);
    assert!((r.weighted_sobolev() - sob - wtd).abs() < 2e-6);
}

fn plane_wave(g: GridSpec, k: [i64; 2]) -> (ComplexField, f64) {
    let d = g.freq_spacing();
    let xi = [k[0] as f64 * d, k[1] as f64 * d];
    (
        ComplexField::from_fn(g, |x| Complex64::from_polar(1.0, x[0] * xi[0] + x[1] * xi[1])),
        (xi[0] * xi[0] + xi[1] * xi[1]).sqrt(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parseval(seed in 0u64..10_000) {
        let g = GridSpec::new(2, 32, 12.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_smooth_field(&g, &mut rng, 3);
        let hat = fft(&u).unwrap();
        prop_assert!((u.l2_norm() - hat.l2_norm()).abs() <= 1e-10 * u.l2_norm());
    }

    #[test]
    fn multiplier_composition(seed in 0u64..10_000, a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let g = GridSpec::new(2, 32, 12.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_smooth_field(&g, &mut rng, 2);
        let m1 = spectral::fractional_table(&g, a, FractionalKind::Bessel);
        let m2 = spectral::fractional_table(&g, b, FractionalKind::Laplacian);
        let prod: Vec<f64> = m1.iter().zip(&m2).map(|(x, y)| x * y).collect();
        let twice = spectral::apply_multiplier(&spectral::apply_multiplier(&u, Multiplier::Real(&m1)).unwrap(), Multiplier::Real(&m2)).unwrap();
        let once = spectral::apply_multiplier(&u, Multiplier::Real(&prod)).unwrap();
        prop_assert!(once.rel_linf_distance(&twice).unwrap() < 1e-12);
    }

    #[test]
    fn bessel_dominates(seed in 0u64..10_000, gamma in 0.0f64..3.0) {
        let g = GridSpec::new(2, 32, 12.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_smooth_field(&g, &mut rng, 3);
        let r = spectral::norms(&u, gamma, None).unwrap();
        let lap = spectral::fractional_op(&u, gamma, FractionalKind::Laplacian).unwrap().l2_norm();
        prop_assert!(r.sobolev_gamma >= r.l2 * (1.0 - 1e-12));
        prop_assert!(r.sobolev_gamma >= lap * (1.0 - 1e-12));
        prop_assert!(r.l2 >= 0.0 && r.linf >= 0.0 && r.weighted_gamma >= 0.0);
    }

    #[test]
    fn plane_waves_are_eigenfunctions(k0 in -7i64..8, k1 in -7i64..8, gamma in 0.0f64..3.0) {
        let g = GridSpec::new(2, 16, 5.0).unwrap();
        let (u, xi) = plane_wave(g, [k0, k1]);
        for (kind, factor) in [
            (FractionalKind::Laplacian, if gamma == 0.0 { 1.0 } else { xi.powf(gamma) }),
            (FractionalKind::Bessel, (1.0 + xi * xi).powf(gamma / 2.0)),
        ] {
            let v = spectral::fractional_op(&u, gamma, kind).unwrap();
            let expect = u.scale(Complex64::new(factor, 0.0));
            prop_assert!(v.rel_linf_distance(&expect).unwrap() < 1e-12);
        }
        let sq = g.frequency_table(|x| x[0] * x[0] + x[1] * x[1]);
        let v = spectral::apply_multiplier(&u, Multiplier::Real(&sq)).unwrap();
        prop_assert!(v.rel_linf_distance(&u.scale(Complex64::new(xi * xi, 0.0))).unwrap() < 1e-12);
        // the weight is a pointwise multiplication
        let w = spectral::fractional_op(&u, gamma, FractionalKind::Weight).unwrap();
        let expect = ComplexField::from_fn(g, |x| Complex64::from_polar((x[0] * x[0] + x[1] * x[1]).powf(gamma / 2.0), 0.0));
        for ((a, b), c) in w.values().iter().zip(u.values()).zip(expect.values()) {
            prop_assert!((a - b * c.re).norm() < 1e-12 * (1.0 + c.re));
        }
    }
}
