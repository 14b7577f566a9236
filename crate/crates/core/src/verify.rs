//! Operator identity suite driven by random smooth, localized fields.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::ComplexField;
use crate::grid::GridSpec;
use crate::propagator::{self, Sign};
use crate::spectral::{self, FractionalKind};

/// Sum of `count` modulated Gaussian bumps with random centers, widths,
/// momenta and complex amplitudes, all well inside the central half-box.
pub fn random_smooth_field(grid: &GridSpec, rng: &mut impl Rng, count: usize) -> ComplexField {
    let dim = grid.dim();
    let reach = grid.box_length() / 16.0;
    let bumps: Vec<([f64; 3], f64, [f64; 3], Complex64)> = (0..count)
        .map(|_| {
            let mut c = [0.0; 3];
            let mut k = [0.0; 3];
            for a in 0..dim {
                c[a] = rng.gen_range(-reach..reach);
                k[a] = rng.gen_range(-1.0..1.0);
            }
            let w = rng.gen_range(0.8..1.6);
            let amp = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            (c, w, k, amp)
        })
        .collect();
    ComplexField::from_fn(*grid, |x| {
        bumps
            .iter()
            .map(|(c, w, k, amp)| {
                let mut r2 = 0.0;
                let mut ph = 0.0;
                for a in 0..dim {
                    r2 += (x[a] - c[a]).powi(2);
                    ph += k[a] * x[a];
                }
                amp * Complex64::from_polar((-r2 / (2.0 * w * w)).exp(), ph)
            })
            .sum()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub dim: usize,
    pub n: usize,
    pub box_length: f64,
    pub t: f64,
    pub gamma: f64,
    pub seed: u64,
    pub samples: usize,
    /// Center of the Gaussian used for the `|J|^gamma` two-route check.
    pub gaussian_center: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    /// `J` direct vs gauge route, worst over random fields.
    pub j_routes: f64,
    /// `|J|^gamma` gauge route vs conjugated-weight route on the Gaussian.
    pub j_power_routes: f64,
    /// `e^{itD}` vs `M D F M`, worst over the Gaussian and random fields.
    pub factorization: f64,
    /// `| ||J u|| - ||x e^{-itD} u|| | / ||J u||`, worst over random fields.
    pub j_norm_identity: f64,
    /// `| ||(J)^gamma u|| - ||(-4t^2 D)^{gamma/2} M(-t) u|| |`, relative.
    pub j_power_norm_identity: f64,
    /// `|J|^2` vs `sum_a J_a J_a`, relative L2.
    pub j_square: f64,
    /// Unitarity defect of the free flow and of the gauge.
    pub unitarity: f64,
    /// `e^{isD} e^{itD}` vs `e^{i(s+t)D}`, relative L2.
    pub semigroup: f64,
}

fn gaussian_at(grid: &GridSpec, center: &[f64]) -> ComplexField {
    let dim = grid.dim();
    ComplexField::from_fn(*grid, |x| {
        let r2: f64 = (0..dim)
            .map(|a| (x[a] - center.get(a).copied().unwrap_or(0.0)).powi(2))
            .sum();
        Complex64::new((-r2 / 2.0).exp(), 0.0)
    })
}

fn rel(a: f64, b: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn run_identity_suite(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let grid = GridSpec::new(cfg.dim, cfg.n, cfg.box_length)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let t = cfg.t;

    let gauss = gaussian_at(&grid, &cfg.gaussian_center);
    let mut report = VerifyReport {
        j_routes: 0.0,
        j_power_routes: propagator::j_power_route_deviation(&gauss, t, cfg.gamma)?,
        factorization: propagator::mdfm_factorization_check(&gauss, t)?.relative_l2,
        j_norm_identity: 0.0,
        j_power_norm_identity: 0.0,
        j_square: 0.0,
        unitarity: 0.0,
        semigroup: 0.0,
    };

    // |J|^2 against the contracted product of components
    {
        let j2 = propagator::j_power(&gauss, t, 2.0)?;
        let comps = propagator::galilean_j(&gauss, t)?;
        let mut sum = ComplexField::zeros(grid, gauss.space());
        for (a, c) in comps.iter().enumerate() {
            sum = sum.add(&propagator::galilean_j(c, t)?[a])?;
        }
        report.j_square = j2.rel_l2_distance(&sum)?;
    }

    for _ in 0..cfg.samples {
        let u = random_smooth_field(&grid, &mut rng, 4);
        let s = rng.gen_range(0.1..1.0);
        report.j_routes = report.j_routes.max(propagator::galilean_route_deviation(&u, t)?);
        report.factorization = report
            .factorization
            .max(propagator::mdfm_factorization_check(&u, t)?.relative_l2);

        let ju = propagator::galilean_j(&u, t)?;
        let ju_norm = ju.iter().map(|c| c.l2_norm().powi(2)).sum::<f64>().sqrt();
        let back = propagator::free_propagate(&u, -t)?;
        let xb_norm = spectral::weighted_norm(&back, 1.0)?;
        report.j_norm_identity = report.j_norm_identity.max(rel(ju_norm, xb_norm));

        let jp = propagator::j_power(&u, t, cfg.gamma)?;
        let inner = propagator::gauge_m(&u, t, Sign::Minus)?;
        let lap = spectral::fractional_op(&inner, cfg.gamma, FractionalKind::Laplacian)?;
        let lap_norm = lap.l2_norm() * (2.0 * t.abs()).powf(cfg.gamma);
        report.j_power_norm_identity = report.j_power_norm_identity.max(rel(jp.l2_norm(), lap_norm));

        let norm = u.l2_norm();
        let evolved = propagator::free_propagate(&u, t)?;
        let gauged = propagator::gauge_m(&u, t, Sign::Plus)?;
        report.unitarity = report
            .unitarity
            .max(rel(evolved.l2_norm(), norm))
            .max(rel(gauged.l2_norm(), norm));

        let two = propagator::free_propagate(&propagator::free_propagate(&u, s)?, t)?;
        let one = propagator::free_propagate(&u, s + t)?;
        report.semigroup = report.semigroup.max(two.rel_l2_distance(&one)?);
    }
    Ok(report)
}
