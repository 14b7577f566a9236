use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::profile::{require_late_time, FrequencyConvolver, ProfileSnapshot};
use crate::dynamics::{local_power, Couplings};
use crate::kernel::Kernel;
use crate::propagator::{gauge_m, Sign};
use crate::{fft, par, ComplexField, GridSpec, Result, SbpError, Space};

/// Terms of the profile equation at one time, all in frequency space.
/// With `h = F M f`, `A = (K_t*|h|^2) h` and `P = |h|^{2/d} h`:
/// `I1 = F(M^{-1}-1)F^{-1} A`, `I2 = A - (K*|f_hat|^2) f_hat`,
/// `I3 = F(M^{-1}-1)F^{-1} P`, `I4 = P - |f_hat|^{2/d} f_hat`.
#[derive(Clone, Debug)]
pub struct RhsTerms {
    pub t: f64,
    /// `(K*|f_hat|^2) f_hat`
    pub hartree: ComplexField,
    /// `|f_hat|^{2/d} f_hat`
    pub local: ComplexField,
    pub i1: ComplexField,
    pub i2: ComplexField,
    pub i3: ComplexField,
    pub i4: ComplexField,
    /// `I2` expanded around `delta = h - f_hat`.
    pub i2_expanded: ComplexField,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhsNorms {
    pub t: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    /// `||I2 - I2_expanded||_inf / ||I2||_inf`
    pub i2_forms_gap: f64,
    /// `||(2t)^{-1} (K*|f_hat|^2) f_hat||_inf`
    pub retained_hartree: f64,
    /// `||(2t)^{-1} |f_hat|^{2/d} f_hat||_inf`
    pub retained_local: f64,
}

impl RhsTerms {
    /// `(2t)^{-1} [hartree - local + I1 + I2 - I3 - I4]`.
    pub fn rhs(&self) -> Result<ComplexField> {
        let s = Complex64::new(0.5 / self.t, 0.0);
        let sum = self
            .hartree
            .sub(&self.local)?
            .add(&self.i1)?
            .add(&self.i2)?
            .sub(&self.i3)?
            .sub(&self.i4)?;
        Ok(sum.scale(s))
    }

    pub fn norms(&self) -> Result<RhsNorms> {
        let i2 = self.i2.linf_norm();
        let gap = self.i2.sub(&self.i2_expanded)?.linf_norm();
        Ok(RhsNorms {
            t: self.t,
            i1: self.i1.linf_norm(),
            i2,
            i3: self.i3.linf_norm(),
            i4: self.i4.linf_norm(),
            i2_forms_gap: if i2 > 0.0 { gap / i2 } else { gap },
            retained_hartree: self.hartree.linf_norm() * 0.5 / self.t,
            retained_local: self.local.linf_norm() * 0.5 / self.t,
        })
    }
}

/// `F (M^{-1} - 1) F^{-1} a` for frequency-space `a`.
fn gauge_defect(a: &ComplexField, t: f64) -> Result<ComplexField> {
    let g = *a.grid();
    let mut x = fft::ifft(a)?;
    // e^{-i th} - 1 = -2i sin(th/2) e^{-i th/2}, without cancellation
    par::update(x.values_mut(), |i, v| {
        let th = crate::grid::norm2(&g.point(i)) / (4.0 * t);
        let f = Complex64::new(0.0, -2.0 * (0.5 * th).sin()) * Complex64::from_polar(1.0, -0.5 * th);
        *v *= f;
    });
    fft::fft(&x)
}

fn freq_field(grid: GridSpec, values: Vec<Complex64>) -> Result<ComplexField> {
    ComplexField::from_vec(grid, Space::Frequency, values)
}

/// Convolvers for one time, reusable across snapshots at that time.
#[derive(Clone, Debug)]
pub struct RhsContext {
    couplings: Couplings,
    base: Option<FrequencyConvolver>,
    screened: Option<FrequencyConvolver>,
}

impl RhsContext {
    pub fn new(grid: GridSpec, couplings: Couplings, t: f64, pad_factor: usize) -> Result<Self> {
        require_late_time(t)?;
        let (base, screened) = if couplings.hartree != 0.0 {
            (
                Some(FrequencyConvolver::new(grid, Kernel::Base, pad_factor)?),
                Some(FrequencyConvolver::new(grid, Kernel::Screened(t), pad_factor)?),
            )
        } else {
            (None, None)
        };
        Ok(Self {
            couplings,
            base,
            screened,
        })
    }

    fn time(&self) -> Option<f64> {
        match self.screened.as_ref().map(|c| c.kernel()) {
            Some(Kernel::Screened(t)) => Some(t),
            _ => None,
        }
    }

    pub fn terms(&self, p: &ProfileSnapshot) -> Result<RhsTerms> {
        let t = p.t;
        require_late_time(t)?;
        if let Some(ct) = self.time() {
            if ct != t {
                return Err(SbpError::InvalidParameter(format!(
                    "screening built for t = {ct}, snapshot at t = {t}"
                )));
            }
        }
        let f_hat = &p.f_hat;
        f_hat.expect_space(Space::Frequency)?;
        let grid = *f_hat.grid();
        let dim = grid.dim();
        let (a, b) = (self.couplings.hartree, self.couplings.local);

        let f = fft::ifft(f_hat)?;
        let h = fft::fft(&gauge_m(&f, t, Sign::Plus)?)?;
        let hv = h.values();
        let fv = f_hat.values();
        let len = hv.len();

        let zeros = || vec![0.0; len];
        let (kt_h, k_h, k_f) = match (&self.screened, &self.base) {
            (Some(s), Some(k)) => (s.convolve_abs_sqr(hv)?, k.convolve_abs_sqr(hv)?, k.convolve_abs_sqr(fv)?),
            _ => (zeros(), zeros(), zeros()),
        };

        let big_a = freq_field(grid, par::collect(len, |i| a * kt_h[i] * hv[i]))?;
        let big_p = freq_field(grid, par::collect(len, |i| b * local_power(dim, hv[i].norm_sqr()) * hv[i]))?;
        let hartree = freq_field(grid, par::collect(len, |i| a * k_f[i] * fv[i]))?;
        let local = freq_field(grid, par::collect(len, |i| b * local_power(dim, fv[i].norm_sqr()) * fv[i]))?;

        let i1 = gauge_defect(&big_a, t)?;
        let i3 = gauge_defect(&big_p, t)?;
        let i2 = big_a.sub(&hartree)?;
        let i4 = big_p.sub(&local)?;

        let delta: Vec<Complex64> = par::collect(len, |i| hv[i] - fv[i]);
        let cross = match &self.base {
            Some(k) => {
                let d_fbar: Vec<Complex64> = par::collect(len, |i| delta[i] * fv[i].conj());
                let dbar_f: Vec<Complex64> = par::collect(len, |i| delta[i].conj() * fv[i]);
                let dd: Vec<f64> = par::collect(len, |i| delta[i].norm_sqr());
                let (c1, c2, c3) = (k.convolve_complex(&d_fbar)?, k.convolve_complex(&dbar_f)?, k.convolve(&dd)?);
                par::collect(len, |i| c1[i] + c2[i] + c3[i])
            }
            None => vec![Complex64::default(); len],
        };
        let i2_expanded = freq_field(
            grid,
            par::collect(len, |i| {
                a * (kt_h[i] * delta[i] + (kt_h[i] - k_h[i]) * fv[i] + cross[i] * fv[i])
            }),
        )?;

        Ok(RhsTerms {
            t,
            hartree,
            local,
            i1,
            i2,
            i3,
            i4,
            i2_expanded,
        })
    }
}

pub fn rhs_terms(p: &ProfileSnapshot, couplings: Couplings, pad_factor: usize) -> Result<RhsTerms> {
    RhsContext::new(*p.f_hat.grid(), couplings, p.t, pad_factor)?.terms(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub t: f64,
    pub spacing: f64,
    /// `||i d_t f_hat - rhs||_inf` with a centered difference.
    pub residual: f64,
    /// Largest retained term.
    pub retained: f64,
    pub relative: f64,
    pub terms: RhsNorms,
}

/// Profile-equation residual from three equally spaced snapshots.
pub fn profile_ode_residual(snaps: &[ProfileSnapshot], couplings: Couplings, pad_factor: usize) -> Result<ResidualReport> {
    if snaps.len() != 3 {
        return Err(SbpError::InsufficientData(format!(
            "centered difference needs 3 snapshots, got {}",
            snaps.len()
        )));
    }
    let (lo, mid, hi) = (&snaps[0], &snaps[1], &snaps[2]);
    let delta = mid.t - lo.t;
    if !(delta > 0.0) || ((hi.t - mid.t) - delta).abs() > 1e-9 * delta {
        return Err(SbpError::InvalidParameter(format!(
            "snapshots at {}, {}, {} are not equally spaced",
            lo.t, mid.t, hi.t
        )));
    }
    let terms = rhs_terms(mid, couplings, pad_factor)?;
    let rhs = terms.rhs()?;
    let scale = Complex64::new(0.0, 0.5 / delta);
    let lhs = hi.f_hat.sub(&lo.f_hat)?.scale(scale);
    let residual = lhs.sub(&rhs)?.linf_norm();
    let norms = terms.norms()?;
    let retained = norms.retained_hartree.max(norms.retained_local);
    Ok(ResidualReport {
        t: mid.t,
        spacing: delta,
        residual,
        retained,
        relative: if retained > 0.0 { residual / retained } else { residual },
        terms: norms,
    })
}
