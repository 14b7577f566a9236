mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbp_core::kernel::{
    analytic_base_multiplier, analytic_multiplier, kernel_t_value, kernel_value, lemma1_report, Kernel,
    KernelMultiplier, MultiplierMode,
};
use sbp_core::{GridSpec, RealField};

/// Unitary transform of `K = 1/r - e^{-r}/r`: the Coulomb part in closed
/// form, the Yukawa part by radial quadrature.
fn oracle_multiplier(dim: usize, xi: f64) -> f64 {
    let coulomb = match dim {
        2 => 1.0 / xi,
        3 => (2.0 / PI).sqrt() / (xi * xi),
        _ => unreachable!(),
    };
    // r e^{-r}/r is smooth at 0, so the integrands are written out directly
    let yukawa = match dim {
        2 => common::integrate(|r| (-r).exp() * common::bessel_j0(xi * r), 0.0, 45.0, 1e-12),
        _ => (2.0 / PI).sqrt() / xi * common::integrate(|r| (-r).exp() * (xi * r).sin(), 0.0, 45.0, 1e-12),
    };
    coulomb - yukawa
}

#[test]
fn closed_forms_match_quadrature() {
    for dim in [2, 3] {
        for xi in [0.3, 1.0, 2.5, 6.0] {
            let q = oracle_multiplier(dim, xi);
            let m = analytic_base_multiplier(dim, xi);
            assert!((q - m).abs() < 1e-8 * (1.0 + m.abs()), "d={dim} xi={xi}: {q} vs {m}");
        }
    }
    assert!((analytic_base_multiplier(3, 1.0) - (2.0 / PI).sqrt() / 2.0).abs() < 1e-15);
}

#[test]
fn multiplier_asymptotics() {
    // 2D: m ~ 1/xi at small xi and m ~ 1/(2 xi^3) at large xi
    assert!((analytic_base_multiplier(2, 1e-6) * 1e-6 - 1.0).abs() < 1e-5);
    let big = 1e4;
    assert!((analytic_base_multiplier(2, big) * big.powi(3) - 0.5).abs() < 1e-6);
    // 3D: m ~ sqrt(2/pi)/xi^4 at large xi
    assert!((analytic_base_multiplier(3, big) * big.powi(4) - (2.0 / PI).sqrt()).abs() < 1e-6);
    // large-frequency tail cross-checked against quadrature
    let q = oracle_multiplier(2, 20.0);
    assert!((q * 8000.0 - 0.5).abs() < 5e-3);
}

#[test]
fn kernel_examples() {
    assert_eq!(kernel_value(&[0.0, 0.0, 0.0]), 1.0);
    assert!((kernel_value(&[0.6, 0.8]) - 0.6321205588285577).abs() < 1e-15);
    assert_eq!(kernel_t_value(&[0.0, 0.0], 3.0).unwrap(), 6.0);
    assert!(kernel_t_value(&[1.0, 0.0], -1.0).is_err());
}

fn direct_convolution(g: &GridSpec, rho: &[f64]) -> Vec<f64> {
    let h2 = g.cell_volume();
    (0..g.len())
        .map(|i| {
            let xi = g.point(i);
            (0..g.len())
                .map(|j| {
                    let xj = g.point(j);
                    kernel_value(&[xi[0] - xj[0], xi[1] - xj[1]]) * rho[j] * h2
                })
                .sum()
        })
        .collect()
}

#[test]
fn padded_convolution_matches_direct_sum() {
    let g = GridSpec::new(2, 16, 6.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rho: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
    let m = KernelMultiplier::sampled(g, Kernel::Base).unwrap();
    let (fast, residue) = m.convolve_values(&rho).unwrap();
    let slow = direct_convolution(&g, &rho);
    let scale = slow.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let err = fast.iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err / scale <= 1e-12, "{err:e}");
    assert!(residue < 1e-12);
}

#[test]
fn point_mass_reproduces_kernel() {
    let g = GridSpec::new(2, 32, 16.0).unwrap();
    let w = 2.5;
    let src = g.flatten([12, 20, 0]);
    let mut rho = vec![0.0; g.len()];
    rho[src] = w / g.cell_volume();
    let m = KernelMultiplier::sampled(g, Kernel::Base).unwrap();
    let (v, _) = m.convolve_values(&rho).unwrap();
    let x0 = g.point(src);
    for i in (0..g.len()).step_by(37) {
        let x = g.point(i);
        let k = kernel_value(&[x[0] - x0[0], x[1] - x0[1]]);
        assert!((v[i] - w * k).abs() < 1e-12, "{} vs {}", v[i], w * k);
    }
    let (zero, _) = m.convolve_values(&vec![0.0; g.len()]).unwrap();
    assert!(zero.iter().all(|&z| z == 0.0));
}

#[test]
fn grid_mismatch_rejected() {
    let g = GridSpec::new(2, 16, 6.0).unwrap();
    let other = GridSpec::new(2, 16, 7.0).unwrap();
    let m = KernelMultiplier::sampled(g, Kernel::Base).unwrap();
    assert!(m.convolve(&RealField::zeros(other)).is_err());
    assert!(KernelMultiplier::new(g, Kernel::Screened(0.0), MultiplierMode::Sampled, 2).is_err());
}

#[test]
fn tables_finite_and_analytic_nonnegative() {
    let g = GridSpec::new(2, 64, 16.0).unwrap();
    let a = KernelMultiplier::new(g, Kernel::Base, MultiplierMode::Analytic, 2).unwrap();
    assert!(a.table().iter().all(|m| m.is_finite() && *m >= 0.0));
    let s = KernelMultiplier::sampled(g, Kernel::Base).unwrap();
    assert!(s.table().iter().all(|m| m.is_finite()));
    // zero modes coincide by construction
    assert!((a.table()[0] - s.table()[0]).abs() < 1e-12 * s.table()[0]);
    let mut csv = Vec::new();
    a.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("xi_abs,m\n"));
    assert_eq!(text.lines().count(), 1 + g.padded(2).len());
}

#[test]
fn lemma1_critical_exponent_grows_logarithmically() {
    let r = lemma1_report(2, 2.0, &[16.0, 32.0, 64.0], 0.125).unwrap();
    assert!(r.norms_increasing());
    // ||K||_2^2 gains 2 pi log 2 per doubling once the box is much larger than 1
    assert!(r.log_trend_deviation() < 0.05, "{r:?}");
    let sup = lemma1_report(2, f64::INFINITY, &[32.0, 64.0], 0.25).unwrap();
    assert!(sup.rows.iter().all(|row| row.norm == 1.0));
    assert!(lemma1_report(2, 2.5, &[64.0, 32.0], 0.25).is_err());
}

#[test]
fn lemma1_supercritical_sequence_is_cauchy() {
    // relative changes shrink under repeated doubling when p > d
    let r = lemma1_report(2, 2.5, &[16.0, 32.0, 64.0, 128.0], 0.25).unwrap();
    let changes: Vec<f64> = r.rows.iter().skip(1).map(|row| row.relative_change).collect();
    assert!(changes.windows(2).all(|w| w[1] < w[0]), "{changes:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pointwise_domination(x in -50.0f64..50.0, y in -50.0f64..50.0, t in 0.5f64..100.0) {
        prop_assume!(x != 0.0 || y != 0.0);
        let r = (x * x + y * y).sqrt();
        let k = kernel_value(&[x, y]);
        let kt = kernel_t_value(&[x, y], t).unwrap();
        prop_assert!(k <= kt * (1.0 + 1e-15));
        prop_assert!(kt <= 1.0 / r * (1.0 + 1e-15));
        prop_assert!(k > 0.0 && k <= 1.0 && kt <= 2.0 * t);
    }

    #[test]
    fn screened_multiplier_monotone_in_time(xi in 0.01f64..50.0, t in 0.5f64..20.0, dt in 0.0f64..20.0) {
        for dim in [2, 3] {
            let a = analytic_multiplier(dim, 2.0 * t, xi);
            let b = analytic_multiplier(dim, 2.0 * (t + dt), xi);
            prop_assert!(b >= a * (1.0 - 1e-13));
        }
    }

    #[test]
    fn convolution_linear_and_translation_equivariant(seed in 0u64..1000, a in -2.0f64..2.0) {
        let g = GridSpec::new(2, 16, 8.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // support in the interior so a one-cell shift stays on the grid
        let mut rho1 = vec![0.0; g.len()];
        let mut rho2 = vec![0.0; g.len()];
        for i in 2..13 {
            for j in 2..13 {
                rho1[g.flatten([i, j, 0])] = rng.gen_range(0.0..1.0);
                rho2[g.flatten([i, j, 0])] = rng.gen_range(0.0..1.0);
            }
        }
        let m = KernelMultiplier::sampled(g, Kernel::Base).unwrap();
        let c1 = m.convolve_values(&rho1).unwrap().0;
        let c2 = m.convolve_values(&rho2).unwrap().0;
        let mix: Vec<f64> = rho1.iter().zip(&rho2).map(|(p, q)| p + a * q).collect();
        let cm = m.convolve_values(&mix).unwrap().0;
        let scale = c1.iter().chain(&c2).fold(0.0f64, |s, v| s.max(v.abs()));
        for i in 0..g.len() {
            prop_assert!((cm[i] - c1[i] - a * c2[i]).abs() <= 1e-12 * scale * (1.0 + a.abs()));
        }
        let mut shifted = vec![0.0; g.len()];
        for i in 1..16 {
            for j in 0..16 {
                shifted[g.flatten([i, j, 0])] = rho1[g.flatten([i - 1, j, 0])];
            }
        }
        let cs = m.convolve_values(&shifted).unwrap().0;
        for i in 1..16 {
            for j in 0..16 {
                prop_assert!((cs[g.flatten([i, j, 0])] - c1[g.flatten([i - 1, j, 0])]).abs() <= 1e-12 * scale);
            }
        }
        // nonnegative density, nonnegative output
        prop_assert!(c1.iter().all(|&v| v >= -1e-12 * scale));
    }
}
