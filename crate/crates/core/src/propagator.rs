//! Free Schrodinger flow, the quadratic gauge `M(t)`, the dilation `D(t)`,
//! the Galilean operator `J(t) = x + 2it grad` and its fractional powers.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SbpError};
use crate::fft;
use crate::field::{fftshift, ComplexField, Space};
use crate::grid::{norm2, GridSpec};
use crate::interp;
use crate::par;
use crate::spectral::{self, Multiplier};

/// Default bound on edge mass when a resampling target leaves the box.
pub const EDGE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Phase tables for a fixed grid and time.
#[derive(Clone, Debug)]
pub struct PropagatorContext {
    grid: GridSpec,
    t: f64,
    /// `e^{-i t |xi|^2}`, DFT order
    free: Vec<Complex64>,
    /// `e^{i|x|^2/4t}`; absent at `t = 0`
    gauge: Option<Vec<Complex64>>,
}

pub fn free_phase(grid: &GridSpec, t: f64) -> Vec<Complex64> {
    grid.frequency_table(|xi| Complex64::from_polar(1.0, -t * norm2(&xi)))
}

pub fn gauge_phase(grid: &GridSpec, t: f64, sign: Sign) -> Result<Vec<Complex64>> {
    if t == 0.0 {
        return Err(SbpError::ZeroTime);
    }
    let s = sign.value() / (4.0 * t);
    Ok(grid.physical_table(|x| Complex64::from_polar(1.0, s * norm2(&x))))
}

impl PropagatorContext {
    pub fn new(grid: GridSpec, t: f64) -> Self {
        Self {
            grid,
            t,
            free: free_phase(&grid, t),
            gauge: gauge_phase(&grid, t, Sign::Plus).ok(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn free_table(&self) -> &[Complex64] {
        &self.free
    }

    pub fn gauge_table(&self) -> Result<&[Complex64]> {
        self.gauge.as_deref().ok_or(SbpError::ZeroTime)
    }

    pub fn free_propagate(&self, u: &ComplexField) -> Result<ComplexField> {
        check_grid(u, &self.grid)?;
        spectral::apply_multiplier(u, Multiplier::Complex(&self.free))
    }

    pub fn gauge(&self, u: &ComplexField, sign: Sign) -> Result<ComplexField> {
        check_grid(u, &self.grid)?;
        u.expect_space(Space::Physical)?;
        let table = self.gauge_table()?;
        let mut out = u.clone();
        match sign {
            Sign::Plus => par::update(out.values_mut(), |i, v| *v *= table[i]),
            Sign::Minus => par::update(out.values_mut(), |i, v| *v *= table[i].conj()),
        }
        Ok(out)
    }
}

fn check_grid(u: &ComplexField, grid: &GridSpec) -> Result<()> {
    if !u.grid().same_as(grid) {
        return Err(SbpError::GridMismatch(format!("{:?} vs {:?}", u.grid(), grid)));
    }
    Ok(())
}

/// `e^{it Delta} u = F^{-1} e^{-it|xi|^2} F u`.
pub fn free_propagate(u: &ComplexField, t: f64) -> Result<ComplexField> {
    if t == 0.0 {
        u.expect_space(Space::Physical)?;
        return Ok(u.clone());
    }
    spectral::apply_multiplier(u, Multiplier::Complex(&free_phase(u.grid(), t)))
}

/// Pointwise multiplication by `e^{+- i|x|^2/4t}`.
pub fn gauge_m(u: &ComplexField, t: f64, sign: Sign) -> Result<ComplexField> {
    u.expect_space(Space::Physical)?;
    let table = gauge_phase(u.grid(), t, sign)?;
    let mut out = u.clone();
    par::update(out.values_mut(), |i, v| *v *= table[i]);
    Ok(out)
}

/// `(2it)^{-d/2}` on the principal branch: `(2|t|)^{-d/2} e^{-+ i pi d/4}`.
pub fn dilation_prefactor(dim: usize, t: f64) -> Complex64 {
    let d = dim as f64;
    let arg = -t.signum() * PI * d / 4.0;
    Complex64::from_polar((2.0 * t.abs()).powf(-d / 2.0), arg)
}

/// Evaluates `(2it)^{-d/2} f(x / 2t)` at the physical points of `target`,
/// where `f` is given by samples on `source_grid` in physical layout.
pub fn dilate_onto(
    source_grid: &GridSpec,
    samples: &[Complex64],
    target: &GridSpec,
    t: f64,
    edge_tolerance: f64,
) -> Result<Vec<Complex64>> {
    if t == 0.0 {
        return Err(SbpError::ZeroTime);
    }
    let axis: Vec<f64> = target.coords().iter().map(|x| x / (2.0 * t)).collect();
    let targets = vec![axis; target.dim()];
    let mut out = interp::resample(source_grid, samples, &targets, edge_tolerance)?;
    let c = dilation_prefactor(target.dim(), t);
    par::update(&mut out, |_, v| *v *= c);
    Ok(out)
}

/// `D(t) u (x) = (2it)^{-d/2} u(x / 2t)` on the same grid, by band-limited
/// resampling.
pub fn dilation(u: &ComplexField, t: f64) -> Result<ComplexField> {
    u.expect_space(Space::Physical)?;
    let g = *u.grid();
    let out = dilate_onto(&g, u.values(), &g, t, EDGE_TOLERANCE)?;
    ComplexField::from_vec(g, Space::Physical, out)
}

/// `D(t)^{-1} = i^d D(1 / 4t)`.
pub fn dilation_inverse(u: &ComplexField, t: f64) -> Result<ComplexField> {
    if t == 0.0 {
        return Err(SbpError::ZeroTime);
    }
    let d = dilation(u, 1.0 / (4.0 * t))?;
    Ok(d.scale(Complex64::i().powu(u.grid().dim() as u32)))
}

/// Mass fraction inside the centered half-box `max_i |x_i| < L/4`.
pub fn half_box_mass_fraction(u: &ComplexField) -> f64 {
    let g = *u.grid();
    let quarter = 0.25 * g.box_length();
    let d = u.values();
    let total = par::sum(d.len(), |i| d[i].norm_sqr());
    if total == 0.0 {
        return 1.0;
    }
    let inside = par::sum(d.len(), |i| {
        let x = g.point(i);
        if x.iter().take(g.dim()).all(|c| c.abs() < quarter) {
            d[i].norm_sqr()
        } else {
            0.0
        }
    });
    inside / total
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub t: f64,
    pub relative_l2: f64,
    pub half_box_mass: f64,
}

/// `||e^{itD}u - M(t) D(t) F M(t) u|| / ||u||`.
///
/// The right side is built without the free propagator: the Fourier
/// transform is read as a function on the frequency lattice and sampled at
/// `x / 2t` by band-limited interpolation.
pub fn mdfm_factorization_check(u: &ComplexField, t: f64) -> Result<FactorizationReport> {
    u.expect_space(Space::Physical)?;
    let inside = half_box_mass_fraction(u);
    if inside < 1.0 - 1e-8 {
        return Err(SbpError::NotLocalized { inside });
    }
    let norm = u.l2_norm();
    if norm == 0.0 {
        return Ok(FactorizationReport {
            t,
            relative_l2: 0.0,
            half_box_mass: inside,
        });
    }
    let g = *u.grid();
    let lhs = free_propagate(u, t)?;

    let mu = gauge_m(u, t, Sign::Plus)?;
    let hat = fft::fft(&mu)?;
    let centered = fftshift(&g, hat.values());
    let dilated = dilate_onto(&g.dual(), &centered, &g, t, EDGE_TOLERANCE)?;
    let rhs = gauge_m(&ComplexField::from_vec(g, Space::Physical, dilated)?, t, Sign::Plus)?;

    Ok(FactorizationReport {
        t,
        relative_l2: lhs.sub(&rhs)?.l2_norm() / norm,
        half_box_mass: inside,
    })
}

/// `J(t) u = x u + 2it grad u`, spectral gradient. One field per axis.
pub fn galilean_j(u: &ComplexField, t: f64) -> Result<Vec<ComplexField>> {
    u.expect_space(Space::Physical)?;
    let g = *u.grid();
    let grad = spectral::gradient(u)?;
    let c = Complex64::new(0.0, 2.0 * t);
    Ok(grad
        .into_iter()
        .enumerate()
        .map(|(a, mut comp)| {
            let src = u.values();
            par::update(comp.values_mut(), |i, v| *v = src[i] * g.point(i)[a] + c * *v);
            comp
        })
        .collect())
}

/// `J(t) u = M(t) (2it grad) M(-t) u`.
pub fn galilean_j_gauge(u: &ComplexField, t: f64) -> Result<Vec<ComplexField>> {
    let ctx = PropagatorContext::new(*u.grid(), t);
    let w = ctx.gauge(u, Sign::Minus)?;
    let c = Complex64::new(0.0, 2.0 * t);
    spectral::gradient(&w)?
        .into_iter()
        .map(|comp| ctx.gauge(&comp.scale(c), Sign::Plus))
        .collect()
}

/// Largest relative L2 gap between the two `J` routes over components.
pub fn galilean_route_deviation(u: &ComplexField, t: f64) -> Result<f64> {
    let a = galilean_j(u, t)?;
    let b = galilean_j_gauge(u, t)?;
    let mut worst: f64 = 0.0;
    for (x, y) in a.iter().zip(&b) {
        let scale = x.l2_norm().max(y.l2_norm());
        if scale > 0.0 {
            worst = worst.max(x.sub(y)?.l2_norm() / scale);
        }
    }
    Ok(worst)
}

/// `|J|^gamma(t) u = M(t) (-4t^2 Delta)^{gamma/2} M(-t) u`.
pub fn j_power(u: &ComplexField, t: f64, gamma: f64) -> Result<ComplexField> {
    if !(gamma >= 0.0) {
        return Err(SbpError::InvalidParameter(format!("power {gamma} must be >= 0")));
    }
    let ctx = PropagatorContext::new(*u.grid(), t);
    let w = ctx.gauge(u, Sign::Minus)?;
    let g = *u.grid();
    let table = g.frequency_table(|xi| {
        if gamma == 0.0 {
            1.0
        } else {
            (4.0 * t * t * norm2(&xi)).powf(0.5 * gamma)
        }
    });
    let w = spectral::apply_multiplier(&w, Multiplier::Real(&table))?;
    ctx.gauge(&w, Sign::Plus)
}

/// `e^{itD} |x|^gamma e^{-itD} u`.
pub fn j_power_conjugated(u: &ComplexField, t: f64, gamma: f64) -> Result<ComplexField> {
    if t == 0.0 {
        return Err(SbpError::ZeroTime);
    }
    let back = free_propagate(u, -t)?;
    let weighted = spectral::fractional_op(&back, gamma, spectral::FractionalKind::Weight)?;
    free_propagate(&weighted, t)
}

/// Relative L2 gap between the two `|J|^gamma` routes.
pub fn j_power_route_deviation(u: &ComplexField, t: f64, gamma: f64) -> Result<f64> {
    let a = j_power(u, t, gamma)?;
    let b = j_power_conjugated(u, t, gamma)?;
    let scale = a.l2_norm().max(b.l2_norm());
    Ok(if scale == 0.0 { 0.0 } else { a.sub(&b)?.l2_norm() / scale })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(g: GridSpec, w: f64, c: [f64; 2]) -> ComplexField {
        ComplexField::from_fn(g, |x| {
            let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
            Complex64::new((-r2 / (2.0 * w * w)).exp(), 0.0)
        })
    }

    #[test]
    fn zero_time_is_identity_and_gauge_rejects_zero() {
        let g = GridSpec::new(2, 16, 8.0).unwrap();
        let u = gaussian(g, 1.0, [0.0, 0.0]);
        assert_eq!(free_propagate(&u, 0.0).unwrap(), u);
        assert!(gauge_m(&u, 0.0, Sign::Plus).is_err());
        assert!(dilation(&u, 0.0).is_err());
    }

    #[test]
    fn gauge_phase_at_radius_two() {
        // |x|^2 = 4, t = 1: phase e^{i}
        let g = GridSpec::new(2, 16, 16.0).unwrap();
        let u = ComplexField::from_fn(g, |_| Complex64::new(1.0, 0.0));
        let v = gauge_m(&u, 1.0, Sign::Plus).unwrap();
        let idx = g.flatten([10, 8, 0]); // x = (2, 0)
        assert_eq!(g.point(idx)[0], 2.0);
        assert!((v.values()[idx] - Complex64::from_polar(1.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn dilation_at_half_is_a_phase() {
        let g = GridSpec::new(2, 32, 16.0).unwrap();
        let u = gaussian(g, 1.0, [0.5, -0.3]);
        let v = dilation(&u, 0.5).unwrap();
        let expect = u.scale(Complex64::i().powf(-1.0));
        assert!(v.rel_linf_distance(&expect).unwrap() < 1e-12);
    }

    #[test]
    fn galilean_at_zero_time_is_position() {
        let g = GridSpec::new(2, 16, 8.0).unwrap();
        let u = gaussian(g, 1.0, [0.0, 0.0]);
        let j = galilean_j(&u, 0.0).unwrap();
        let expect = ComplexField::from_fn(g, |x| u.values()[g.flatten([
            ((x[0] + 4.0) / 0.5).round() as usize,
            ((x[1] + 4.0) / 0.5).round() as usize,
            0,
        ])] * x[0]);
        assert!(j[0].rel_linf_distance(&expect).unwrap() < 1e-15);
    }
}
