use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{local_power, Couplings};
use crate::field::fftshift;
use crate::kernel::{Kernel, KernelMultiplier, MultiplierMode};
use crate::propagator::{free_phase, j_power};
use crate::{fft, par, spectral, ComplexField, GridSpec, Result, SbpError, Space};

/// `f_hat(t) = e^{it|xi|^2} u_hat(t)`: the free-flow pullback in frequency space.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileSnapshot {
    pub t: f64,
    pub f_hat: ComplexField,
}

/// Profile from a field in either space. Frequency input avoids any transform.
pub fn profile(u: &ComplexField, t: f64) -> Result<ProfileSnapshot> {
    let mut f_hat = match u.space() {
        Space::Frequency => u.clone(),
        Space::Physical => fft::fft(u)?,
    };
    // free_phase(t) is e^{-it|xi|^2}; the pullback needs its conjugate
    let phase = free_phase(u.grid(), -t);
    par::update(f_hat.values_mut(), |i, v| *v *= phase[i]);
    Ok(ProfileSnapshot { t, f_hat })
}

/// Inverse of [`profile`]: the physical field `u(t)`.
pub fn unprofile(p: &ProfileSnapshot) -> Result<ComplexField> {
    p.f_hat.expect_space(Space::Frequency)?;
    let phase = free_phase(p.f_hat.grid(), p.t);
    let mut u_hat = p.f_hat.clone();
    par::update(u_hat.values_mut(), |i, v| *v *= phase[i]);
    fft::ifft(&u_hat)
}

pub(crate) fn require_late_time(t: f64) -> Result<()> {
    if !(t >= 1.0 && t.is_finite()) {
        return Err(SbpError::InvalidParameter(format!("diagnostics need t >= 1, got {t}")));
    }
    Ok(())
}

/// Convolution in the frequency variable: frequency-ordered data are shifted
/// onto the dual grid (spacing `dxi`, centered) and convolved there.
#[derive(Clone, Debug)]
pub struct FrequencyConvolver {
    grid: GridSpec,
    mult: KernelMultiplier,
}

impl FrequencyConvolver {
    pub fn new(grid: GridSpec, kernel: Kernel, pad_factor: usize) -> Result<Self> {
        let mult = KernelMultiplier::new(grid.dual(), kernel, MultiplierMode::Sampled, pad_factor)?;
        Ok(Self { grid, mult })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn kernel(&self) -> Kernel {
        self.mult.kernel()
    }

    /// Real density in DFT order -> convolution in DFT order.
    pub fn convolve(&self, density: &[f64]) -> Result<Vec<f64>> {
        let shifted = fftshift(&self.grid, density);
        let (c, _) = self.mult.convolve_values(&shifted)?;
        Ok(fftshift(&self.grid, &c))
    }

    /// Complex density, by linearity over real and imaginary parts.
    pub fn convolve_complex(&self, density: &[Complex64]) -> Result<Vec<Complex64>> {
        let re: Vec<f64> = density.iter().map(|z| z.re).collect();
        let im: Vec<f64> = density.iter().map(|z| z.im).collect();
        let (a, b) = (self.convolve(&re)?, self.convolve(&im)?);
        Ok(a.into_iter().zip(b).map(|(x, y)| Complex64::new(x, y)).collect())
    }

    pub fn convolve_abs_sqr(&self, f: &[Complex64]) -> Result<Vec<f64>> {
        let rho: Vec<f64> = par::collect(f.len(), |i| f[i].norm_sqr());
        self.convolve(&rho)
    }
}

/// `hartree K*|f|^2 - local |f|^{2/d}` with the convolution in frequency.
#[derive(Clone, Debug)]
pub struct PhasePotential {
    couplings: Couplings,
    conv: Option<FrequencyConvolver>,
}

impl PhasePotential {
    pub fn new(grid: GridSpec, couplings: Couplings, pad_factor: usize) -> Result<Self> {
        let conv = if couplings.hartree != 0.0 {
            Some(FrequencyConvolver::new(grid, Kernel::Base, pad_factor)?)
        } else {
            None
        };
        Ok(Self { couplings, conv })
    }

    pub fn couplings(&self) -> Couplings {
        self.couplings
    }

    pub fn evaluate(&self, f_hat: &ComplexField) -> Result<Vec<f64>> {
        f_hat.expect_space(Space::Frequency)?;
        let d = f_hat.grid().dim();
        let f = f_hat.values();
        let mut v = match &self.conv {
            Some(c) => c.convolve_abs_sqr(f)?,
            None => vec![0.0; f.len()],
        };
        let (a, b) = (self.couplings.hartree, self.couplings.local);
        par::update(&mut v, |i, x| *x = a * *x - b * local_power(d, f[i].norm_sqr()));
        Ok(v)
    }
}

/// The D/E norms and their ingredients at one time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapNorms {
    pub t: f64,
    /// `||f_hat||_inf`
    pub d_norm: f64,
    /// `t^{-eps^2} (||<grad>^gamma u|| + |||J|^gamma u||)`
    pub e_norm: f64,
    pub sobolev: f64,
    pub j_power: f64,
    pub linf_u: f64,
    /// `||u||_inf t^{d/2} / (D + E)`
    pub bridge_ratio: f64,
}

pub fn bootstrap_norms(u: &ComplexField, t: f64, eps: f64, gamma: f64) -> Result<BootstrapNorms> {
    require_late_time(t)?;
    u.expect_space(Space::Physical)?;
    let u_hat = fft::fft(u)?;
    let p = profile(&u_hat, t)?;
    bootstrap_from_parts(u, &u_hat, &p, eps, gamma)
}

pub(crate) fn bootstrap_from_parts(
    u: &ComplexField,
    u_hat: &ComplexField,
    p: &ProfileSnapshot,
    eps: f64,
    gamma: f64,
) -> Result<BootstrapNorms> {
    let t = p.t;
    let d_norm = p.f_hat.linf_norm();
    let sobolev = spectral::sobolev_norm(u_hat, gamma)?;
    let jp = j_power(u, t, gamma)?.l2_norm();
    let e_norm = t.powf(-eps * eps) * (sobolev + jp);
    let linf_u = u.linf_norm();
    let dim = u.grid().dim() as f64;
    let denom = d_norm + e_norm;
    let bridge_ratio = if denom > 0.0 { linf_u * t.powf(dim / 2.0) / denom } else { 0.0 };
    Ok(BootstrapNorms {
        t,
        d_norm,
        e_norm,
        sobolev,
        j_power: jp,
        linf_u,
        bridge_ratio,
    })
}
