//! Fourier multipliers, fractional operators and norms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SbpError};
use crate::fft;
use crate::field::{ComplexField, Space};
use crate::grid::{norm2, GridSpec};
use crate::par;

/// Frequency-indexed multiplier table in DFT order.
#[derive(Clone, Copy, Debug)]
pub enum Multiplier<'a> {
    Real(&'a [f64]),
    Complex(&'a [Complex64]),
}

impl Multiplier<'_> {
    fn len(&self) -> usize {
        match self {
            Multiplier::Real(m) => m.len(),
            Multiplier::Complex(m) => m.len(),
        }
    }
}

/// Multiplies a frequency-space field in place.
pub fn multiply_frequency(field: &mut ComplexField, m: Multiplier<'_>) -> Result<()> {
    field.expect_space(Space::Frequency)?;
    if m.len() != field.values().len() {
        return Err(SbpError::SizeMismatch {
            expected: field.values().len(),
            found: m.len(),
        });
    }
    match m {
        Multiplier::Real(m) => par::update(field.values_mut(), |i, v| *v *= m[i]),
        Multiplier::Complex(m) => par::update(field.values_mut(), |i, v| *v *= m[i]),
    }
    Ok(())
}

/// `F^{-1}[m F u]` for a physical-space field.
pub fn apply_multiplier(field: &ComplexField, m: Multiplier<'_>) -> Result<ComplexField> {
    field.expect_space(Space::Physical)?;
    if m.len() != field.values().len() {
        return Err(SbpError::SizeMismatch {
            expected: field.values().len(),
            found: m.len(),
        });
    }
    let mut out = fft::fft(field)?;
    multiply_frequency(&mut out, m)?;
    fft::ifft_inplace(&mut out)?;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FractionalKind {
    /// `|xi|^gamma`
    Laplacian,
    /// `<xi>^gamma = (1 + |xi|^2)^{gamma/2}`
    Bessel,
    /// pointwise `|x|^gamma`, box-centered, not periodized
    Weight,
}

/// `|v|^gamma` with the convention `0^0 = 1`.
#[inline]
fn radial_power(r2: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        1.0
    } else {
        r2.powf(0.5 * gamma)
    }
}

pub fn fractional_table(grid: &GridSpec, gamma: f64, kind: FractionalKind) -> Vec<f64> {
    match kind {
        FractionalKind::Laplacian => grid.frequency_table(|xi| radial_power(norm2(&xi), gamma)),
        FractionalKind::Bessel => grid.frequency_table(|xi| radial_power(1.0 + norm2(&xi), gamma)),
        FractionalKind::Weight => grid.physical_table(|x| radial_power(norm2(&x), gamma)),
    }
}

pub fn fractional_op(field: &ComplexField, gamma: f64, kind: FractionalKind) -> Result<ComplexField> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(SbpError::InvalidParameter(format!(
            "fractional power {gamma} must be finite and nonnegative"
        )));
    }
    field.expect_space(Space::Physical)?;
    let table = fractional_table(field.grid(), gamma, kind);
    match kind {
        FractionalKind::Weight => {
            let mut out = field.clone();
            par::update(out.values_mut(), |i, v| *v *= table[i]);
            Ok(out)
        }
        _ => apply_multiplier(field, Multiplier::Real(&table)),
    }
}

/// Spectral partial derivative along `axis`, multiplier `i xi_axis`.
/// The Nyquist mode is dropped so real fields stay real.
pub fn derivative_table(grid: &GridSpec, axis: usize) -> Vec<Complex64> {
    let n = grid.n() as i64;
    par::collect(grid.len(), |i| {
        let k = grid.wavevector_index(i)[axis];
        if k == -n / 2 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, k as f64 * grid.freq_spacing())
        }
    })
}

/// Spectral gradient, one component per axis.
pub fn gradient(field: &ComplexField) -> Result<Vec<ComplexField>> {
    field.expect_space(Space::Physical)?;
    let hat = fft::fft(field)?;
    (0..field.grid().dim())
        .map(|a| {
            let mut comp = hat.clone();
            multiply_frequency(&mut comp, Multiplier::Complex(&derivative_table(field.grid(), a)))?;
            fft::ifft_inplace(&mut comp)?;
            Ok(comp)
        })
        .collect()
}

/// `||u||_{L^p}` with cell-volume weighting; `p = inf` gives the max modulus.
pub fn lp_norm(field: &ComplexField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(SbpError::InvalidParameter(format!("L^p exponent {p} must be >= 1")));
    }
    if p.is_infinite() {
        return Ok(field.linf_norm());
    }
    let d = field.values();
    let s = par::sum(d.len(), |i| d[i].norm().powf(p));
    Ok((s * field.cell_volume()).powf(1.0 / p))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub l2: f64,
    pub linf: f64,
    /// `||<grad>^gamma u||_{L^2}`
    pub sobolev_gamma: f64,
    /// `|| |x|^gamma u||_{L^2}`
    pub weighted_gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lp: Option<(f64, f64)>,
}

impl NormReport {
    /// `H^{gamma,gamma}` norm: Sobolev part plus weighted part.
    pub fn weighted_sobolev(&self) -> f64 {
        self.sobolev_gamma + self.weighted_gamma
    }
}

/// `||<xi>^gamma u_hat||_{L^2}` evaluated directly in frequency space.
pub fn sobolev_norm(field: &ComplexField, gamma: f64) -> Result<f64> {
    let hat = match field.space() {
        Space::Physical => fft::fft(field)?,
        Space::Frequency => field.clone(),
    };
    let grid = *hat.grid();
    let d = hat.values();
    let s = par::sum(d.len(), |i| {
        d[i].norm_sqr() * radial_power(1.0 + norm2(&grid.frequency(i)), 2.0 * gamma)
    });
    Ok((s * grid.freq_cell_volume()).sqrt())
}

/// `|| |x|^gamma u||_{L^2}` for a physical field.
pub fn weighted_norm(field: &ComplexField, gamma: f64) -> Result<f64> {
    field.expect_space(Space::Physical)?;
    let grid = *field.grid();
    let d = field.values();
    let s = par::sum(d.len(), |i| {
        d[i].norm_sqr() * radial_power(norm2(&grid.point(i)), 2.0 * gamma)
    });
    Ok((s * grid.cell_volume()).sqrt())
}

pub fn norms(field: &ComplexField, gamma: f64, p: Option<f64>) -> Result<NormReport> {
    if !(gamma >= 0.0) {
        return Err(SbpError::InvalidParameter(format!("gamma {gamma} must be >= 0")));
    }
    field.expect_space(Space::Physical)?;
    Ok(NormReport {
        l2: field.l2_norm(),
        linf: field.linf_norm(),
        sobolev_gamma: sobolev_norm(field, gamma)?,
        weighted_gamma: weighted_norm(field, gamma)?,
        lp: match p {
            Some(p) => Some((p, lp_norm(field, p)?)),
            None => None,
        },
    })
}
