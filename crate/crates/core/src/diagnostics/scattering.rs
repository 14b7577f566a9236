use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::phase::corrected_profile;
use super::profile::{require_late_time, PhasePotential};
use crate::field::fftshift;
use crate::propagator::{dilate_onto, gauge_phase, Sign, EDGE_TOLERANCE};
use crate::{par, ComplexField, GridSpec, Result, SbpError, Space};

/// Stored state at one diagnostic time.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileSample {
    pub t: f64,
    pub f_hat: ComplexField,
    pub theta: Vec<f64>,
    pub u: ComplexField,
}

impl ProfileSample {
    pub fn g(&self) -> Result<ComplexField> {
        corrected_profile(&self.theta, &self.f_hat)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicRow {
    pub t: f64,
    /// `||g(2t) - g(t)||_inf`
    pub g_diff: f64,
    /// `||f_hat(2t) - f_hat(t)||_inf`
    pub f_diff: f64,
}

/// Differences between samples whose times double.
pub fn dyadic_differences(samples: &[ProfileSample]) -> Result<Vec<DyadicRow>> {
    let mut rows = Vec::new();
    for (i, a) in samples.iter().enumerate() {
        if let Some(b) = samples[i + 1..].iter().find(|b| (b.t - 2.0 * a.t).abs() <= 1e-9 * b.t) {
            rows.push(DyadicRow {
                t: a.t,
                g_diff: b.g()?.sub(&a.g()?)?.linf_norm(),
                f_diff: b.f_hat.sub(&a.f_hat)?.linf_norm(),
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub t: f64,
    /// `||g(t) - W0||_inf`
    pub g_distance: f64,
    /// `||Phi(t) - Phi_inf||_inf`
    pub phase_distance: f64,
}

#[derive(Clone, Debug)]
pub struct ScatteringReport {
    pub t_end: f64,
    /// `g(t_end)`
    pub w0: ComplexField,
    pub phi_inf: Vec<f64>,
    /// `e^{-i Phi_inf} W0`
    pub w: ComplexField,
    /// `hartree K*|W|^2 - local |W|^{2/d}`
    pub potential: Vec<f64>,
    pub convergence: Vec<ConvergenceRow>,
    /// Least-squares exponent of `||g(t) - W0||_inf` against `t`.
    pub fitted_exponent: Option<f64>,
    /// The pair of times used for extrapolating `Phi`.
    pub extrapolation_times: (f64, f64),
}

fn is_power_of_two(t: f64) -> bool {
    t >= 1.0 && (t.log2() - t.log2().round()).abs() < 1e-12
}

/// `Phi(t) = Theta(t)/2 - V[W0] log(t) / 2`.
fn phase_remainder(sample: &ProfileSample, v: &[f64]) -> Vec<f64> {
    let lt = sample.t.ln();
    par::collect(v.len(), |i| 0.5 * sample.theta[i] - 0.5 * v[i] * lt)
}

/// `W0 = g(t_end)` from the last sample, `Phi_inf` by Richardson on the last
/// dyadic pair (`2 Phi(T) - Phi(T/2)`), and `W = e^{-i Phi_inf} W0`.
pub fn extract_w(samples: &[ProfileSample], potential: &PhasePotential) -> Result<ScatteringReport> {
    let last = samples
        .last()
        .ok_or_else(|| SbpError::InsufficientData("no samples".into()))?;
    if last.t < 16.0 {
        return Err(SbpError::InsufficientData(format!("final time {} < 16", last.t)));
    }
    let w0 = last.g()?;
    let v = potential.evaluate(&w0)?;

    let (big, half) = samples
        .iter()
        .rev()
        .filter(|s| is_power_of_two(s.t))
        .find_map(|s| {
            samples
                .iter()
                .find(|h| (h.t - 0.5 * s.t).abs() <= 1e-9 * s.t)
                .map(|h| (s, h))
        })
        .ok_or_else(|| SbpError::InsufficientData("no dyadic pair for extrapolation".into()))?;
    let (pb, ph) = (phase_remainder(big, &v), phase_remainder(half, &v));
    let phi_inf: Vec<f64> = par::collect(v.len(), |i| 2.0 * pb[i] - ph[i]);

    let mut w = w0.clone();
    par::update(w.values_mut(), |i, z| *z *= Complex64::from_polar(1.0, -phi_inf[i]));

    let mut convergence = Vec::new();
    for s in &samples[..samples.len() - 1] {
        let phi = phase_remainder(s, &v);
        let pd = par::max(phi.len(), |i| (phi[i] - phi_inf[i]).abs());
        convergence.push(ConvergenceRow {
            t: s.t,
            g_distance: s.g()?.sub(&w0)?.linf_norm(),
            phase_distance: pd,
        });
    }
    let pts: Vec<(f64, f64)> = convergence
        .iter()
        .filter(|r| r.g_distance > 0.0)
        .map(|r| (r.t.ln(), r.g_distance.ln()))
        .collect();
    let fitted_exponent = if pts.len() >= 2 { Some(super::fit::least_squares(&pts).0) } else { None };

    let diffs = dyadic_differences(samples)?;
    // differences at rounding level carry no trend
    let floor = 1e-12 * w0.linf_norm();
    if let (Some(first), Some(final_row)) = (diffs.first(), diffs.last()) {
        if diffs.len() > 1 && final_row.g_diff >= first.g_diff && final_row.g_diff > floor {
            return Err(SbpError::ScatteringFailure(format!(
                "g is not settling: ||g(2T)-g(T)|| = {:.3e} at T = {} vs {:.3e} at T = {}",
                final_row.g_diff, final_row.t, first.g_diff, first.t
            )));
        }
    }

    Ok(ScatteringReport {
        t_end: last.t,
        w0,
        phi_inf,
        w,
        potential: v,
        convergence,
        fitted_exponent,
        extrapolation_times: (half.t, big.t),
    })
}

/// `u_approx(t, x) = M(t) (2it)^{-d/2} [e^{-(i/2) V log t} W](x / 2t)` on the
/// physical grid `target`. `w` and `v` live on the frequency grid of `target`.
pub fn asymptotic_field(w: &ComplexField, v: &[f64], t: f64, target: &GridSpec) -> Result<ComplexField> {
    require_late_time(t)?;
    w.expect_space(Space::Frequency)?;
    if v.len() != w.values().len() {
        return Err(SbpError::SizeMismatch {
            expected: w.values().len(),
            found: v.len(),
        });
    }
    let lt = t.ln();
    let wv = w.values();
    let rotated: Vec<Complex64> = par::collect(wv.len(), |i| wv[i] * Complex64::from_polar(1.0, -0.5 * v[i] * lt));
    let grid = *w.grid();
    let centered = fftshift(&grid, &rotated);
    let mut out = dilate_onto(&grid.dual(), &centered, target, t, EDGE_TOLERANCE)?;
    let m = gauge_phase(target, t, Sign::Plus)?;
    par::update(&mut out, |i, z| *z *= m[i]);
    ComplexField::from_vec(*target, Space::Physical, out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRow {
    pub t: f64,
    /// `t^{d/2} ||u(t) - u_approx(t)||_inf`
    pub scaled_distance: f64,
    /// `t^{d/2} ||u_approx(t)||_inf`
    pub scaled_approx: f64,
}

pub fn asymptotic_table(samples: &[ProfileSample], report: &ScatteringReport) -> Result<Vec<AsymptoticRow>> {
    let mut rows = Vec::new();
    for s in samples {
        let grid = *s.u.grid();
        let approx = asymptotic_field(&report.w, &report.potential, s.t, &grid)?;
        let scale = s.t.powf(grid.dim() as f64 / 2.0);
        rows.push(AsymptoticRow {
            t: s.t,
            scaled_distance: scale * s.u.sub(&approx)?.linf_norm(),
            scaled_approx: scale * approx.linf_norm(),
        });
    }
    Ok(rows)
}
