//! The Bopp-Podolsky potential `K(x) = (1 - e^{-|x|}) / |x|`, its screened
//! variant `K_t(x) = (1 - e^{-2t|x|}) / |x|`, Fourier multipliers and
//! zero-padded convolution.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SbpError};
use crate::fft;
use crate::field::RealField;
use crate::grid::{norm2, GridSpec};
use crate::par;

/// `(1 - e^{-s r}) / r`, continuous at `r = 0` with value `s`.
#[inline]
pub fn screened(s: f64, r: f64) -> f64 {
    let sr = s * r;
    if sr < 1e-8 {
        s * (1.0 - 0.5 * sr)
    } else {
        -(-sr).exp_m1() / r
    }
}

pub fn kernel_value(x: &[f64]) -> f64 {
    screened(1.0, x.iter().map(|c| c * c).sum::<f64>().sqrt())
}

pub fn kernel_t_value(x: &[f64], t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(SbpError::InvalidParameter(format!("screening time {t} must be positive")));
    }
    Ok(screened(2.0 * t, x.iter().map(|c| c * c).sum::<f64>().sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Kernel {
    /// `K`
    Base,
    /// `K_t`, screening length `1 / 2t`
    Screened(f64),
}

impl Kernel {
    /// Exponential rate `s` in `(1 - e^{-s r}) / r`.
    pub fn rate(self) -> f64 {
        match self {
            Kernel::Base => 1.0,
            Kernel::Screened(t) => 2.0 * t,
        }
    }

    fn validate(self) -> Result<()> {
        match self {
            Kernel::Screened(t) if !(t > 0.0 && t.is_finite()) => Err(SbpError::InvalidParameter(
                format!("screening time {t} must be positive"),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MultiplierMode {
    Sampled,
    Analytic,
}

/// Closed-form unitary transform of `K` at `|xi|` (`xi != 0`).
pub fn analytic_base_multiplier(dim: usize, xi: f64) -> f64 {
    let x2 = xi * xi;
    match dim {
        2 => 1.0 / xi - 1.0 / (1.0 + x2).sqrt(),
        // 1/x2 - 1/(1+x2) = 1 / (x2 (1 + x2)), written to avoid cancellation
        3 => (2.0 / PI).sqrt() / (x2 * (1.0 + x2)),
        _ => unreachable!("dimension checked by GridSpec"),
    }
}

/// Closed-form unitary transform of `(1 - e^{-s r}) / r` at `|xi| != 0`,
/// using `K_s(x) = s K(s x)`.
pub fn analytic_multiplier(dim: usize, rate: f64, xi: f64) -> f64 {
    if dim == 2 {
        // 1/xi - 1/sqrt(s^2 + xi^2), rationalized
        let q = (rate * rate + xi * xi).sqrt();
        rate * rate / (xi * q * (q + xi))
    } else {
        rate * rate.powi(-(dim as i32)) * analytic_base_multiplier(dim, xi / rate)
    }
}

/// Fourier multiplier of a kernel on a zero-padded grid.
///
/// `table` holds the unitary transform `m(xi)` on the padded grid in DFT
/// order, so that `K * rho = F^{-1}[(2 pi)^{d/2} m F rho]`.
#[derive(Clone, Debug)]
pub struct KernelMultiplier {
    grid: GridSpec,
    padded: GridSpec,
    kernel: Kernel,
    mode: MultiplierMode,
    pad_factor: usize,
    table: Vec<f64>,
    /// `(2 pi)^{d/2} m`, what the convolution actually multiplies by.
    scaled: Vec<f64>,
}

/// Sampled kernel on `padded` with the unmatched `-L/2` slab zeroed so the
/// table is even and its transform real.
fn sampled_kernel(padded: &GridSpec, rate: f64) -> Vec<Complex64> {
    let lo = -0.5 * padded.box_length();
    par::collect(padded.len(), |i| {
        let x = padded.point(i);
        if x.iter().take(padded.dim()).any(|&c| c == lo) {
            Complex64::default()
        } else {
            Complex64::new(screened(rate, norm2(&x).sqrt()), 0.0)
        }
    })
}

/// `(2 pi)^{-d/2} h^d sum K(x_j)`: the box integral of the sampled kernel.
fn sampled_zero_mode(padded: &GridSpec, samples: &[Complex64]) -> f64 {
    let s = par::sum(samples.len(), |i| samples[i].re);
    s * padded.cell_volume() * (2.0 * PI).powf(-(padded.dim() as f64) / 2.0)
}

impl KernelMultiplier {
    pub fn new(grid: GridSpec, kernel: Kernel, mode: MultiplierMode, pad_factor: usize) -> Result<Self> {
        kernel.validate()?;
        if pad_factor == 0 {
            return Err(SbpError::InvalidParameter("pad factor must be >= 1".into()));
        }
        if !pad_factor.is_power_of_two() {
            return Err(SbpError::InvalidParameter(format!(
                "pad factor {pad_factor} must be a power of two"
            )));
        }
        let padded = grid.padded(pad_factor);
        let rate = kernel.rate();
        let mut samples = sampled_kernel(&padded, rate);
        let table = match mode {
            MultiplierMode::Sampled => {
                fft::forward_inplace(&padded, &mut samples);
                samples.iter().map(|v| v.re).collect()
            }
            MultiplierMode::Analytic => {
                let zero = sampled_zero_mode(&padded, &samples);
                padded.frequency_table(|xi| {
                    let r = norm2(&xi).sqrt();
                    if r == 0.0 {
                        zero
                    } else {
                        analytic_multiplier(padded.dim(), rate, r)
                    }
                })
            }
        };
        let c = (2.0 * PI).powf(padded.dim() as f64 / 2.0);
        let scaled = table.iter().map(|m| m * c).collect();
        Ok(Self {
            grid,
            padded,
            kernel,
            mode,
            pad_factor,
            table,
            scaled,
        })
    }

    /// Default convolution setup: sampled kernel, padding 2.
    pub fn sampled(grid: GridSpec, kernel: Kernel) -> Result<Self> {
        Self::new(grid, kernel, MultiplierMode::Sampled, 2)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn padded_grid(&self) -> &GridSpec {
        &self.padded
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn mode(&self) -> MultiplierMode {
        self.mode
    }

    pub fn pad_factor(&self) -> usize {
        self.pad_factor
    }

    /// `m(xi)` on the padded frequency grid, DFT order.
    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// Convolution of raw samples; returns the real part and the largest
    /// imaginary residue relative to the largest real magnitude.
    pub fn convolve_values(&self, density: &[f64]) -> Result<(Vec<f64>, f64)> {
        let g = &self.grid;
        if density.len() != g.len() {
            return Err(SbpError::SizeMismatch {
                expected: g.len(),
                found: density.len(),
            });
        }
        let p = &self.padded;
        let offset = (p.n() - g.n()) / 2;
        let n = g.n();
        let dim = g.dim();
        let embed = |ix: [usize; 3]| -> [usize; 3] {
            let mut o = [0; 3];
            for a in 0..dim {
                o[a] = ix[a] + offset;
            }
            o
        };

        let mut work = vec![Complex64::default(); p.len()];
        if self.pad_factor == 1 {
            par::update(&mut work, |i, v| *v = Complex64::new(density[i], 0.0));
        } else {
            // copy rows of the last axis into the centered sub-box
            let rows = g.len() / n;
            for r in 0..rows {
                let ix = g.unflatten(r * n);
                let start = p.flatten(embed(ix));
                for j in 0..n {
                    work[start + j] = Complex64::new(density[r * n + j], 0.0);
                }
            }
        }
        fft::forward_inplace(p, &mut work);
        let s = &self.scaled;
        par::update(&mut work, |i, v| *v *= s[i]);
        fft::inverse_inplace(p, &mut work);

        let mut out = vec![0.0; g.len()];
        let mut max_im: f64 = 0.0;
        let mut max_re: f64 = 0.0;
        let rows = g.len() / n;
        for r in 0..rows {
            let ix = g.unflatten(r * n);
            let start = p.flatten(embed(ix));
            for j in 0..n {
                let v = work[start + j];
                out[r * n + j] = v.re;
                max_im = max_im.max(v.im.abs());
                max_re = max_re.max(v.re.abs());
            }
        }
        let residue = if max_re > 0.0 { max_im / max_re } else { max_im };
        Ok((out, residue))
    }

    pub fn convolve(&self, density: &RealField) -> Result<RealField> {
        Ok(self.convolve_with_residue(density)?.0)
    }

    pub fn convolve_with_residue(&self, density: &RealField) -> Result<(RealField, f64)> {
        if !density.grid().same_as(&self.grid) {
            return Err(SbpError::GridMismatch(format!(
                "density on {:?}, multiplier built for {:?}",
                density.grid(),
                self.grid
            )));
        }
        let (out, residue) = self.convolve_values(density.values())?;
        Ok((RealField::from_vec(self.grid, out)?, residue))
    }

    /// Rows `(|xi|, m)` for every padded frequency, sorted by `|xi|`.
    pub fn radial_profile(&self) -> Vec<(f64, f64)> {
        let mut rows: Vec<(f64, f64)> = (0..self.padded.len())
            .map(|i| (norm2(&self.padded.frequency(i)).sqrt(), self.table[i]))
            .collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        rows
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "xi_abs,m")?;
        for (xi, m) in self.radial_profile() {
            writeln!(w, "{xi:.12e},{m:.12e}")?;
        }
        Ok(())
    }
}

/// Largest relative deviation between two multipliers over the padded
/// frequencies with `lo <= |xi| <= hi`.
pub fn band_deviation(a: &KernelMultiplier, b: &KernelMultiplier, lo: f64, hi: f64) -> Result<BandDeviation> {
    if !a.padded.same_as(&b.padded) {
        return Err(SbpError::GridMismatch("multipliers on different padded grids".into()));
    }
    let mut worst = BandDeviation::default();
    for i in 0..a.padded.len() {
        let xi = norm2(&a.padded.frequency(i)).sqrt();
        if xi < lo || xi > hi {
            continue;
        }
        let (ma, mb) = (a.table[i], b.table[i]);
        let rel = (ma - mb).abs() / mb.abs().max(f64::MIN_POSITIVE);
        worst.points += 1;
        if rel > worst.max_relative {
            worst.max_relative = rel;
            worst.at_xi = xi;
            worst.max_absolute_at_worst = (ma - mb).abs();
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BandDeviation {
    pub max_relative: f64,
    pub at_xi: f64,
    pub max_absolute_at_worst: f64,
    pub points: usize,
}

/// `||K||_{L^p}` on nested boxes by midpoint quadrature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Row {
    pub box_length: f64,
    pub norm: f64,
    /// Relative change from the previous box, 0 for the first row.
    pub relative_change: f64,
    /// `norm^p` increment from the previous box divided by `log(L / L_prev)`.
    pub log_slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub dim: usize,
    pub p: f64,
    pub spacing: f64,
    pub rows: Vec<Lemma1Row>,
    /// Surface area of the unit sphere: the `log L` growth rate of
    /// `||K||_p^p` when `p = d`, since `K ~ 1/r` at infinity.
    pub critical_log_slope: f64,
}

impl Lemma1Report {
    pub fn last_relative_change(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.relative_change)
    }

    pub fn norms_increasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].norm > w[0].norm)
    }

    /// Largest deviation of the per-doubling `norm^p` growth from the
    /// critical logarithmic rate, relative to that rate.
    pub fn log_trend_deviation(&self) -> f64 {
        self.rows
            .iter()
            .skip(1)
            .map(|r| (r.log_slope - self.critical_log_slope).abs() / self.critical_log_slope)
            .fold(0.0, f64::max)
    }
}

pub fn unit_sphere_area(dim: usize) -> f64 {
    match dim {
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => unreachable!(),
    }
}

pub fn lemma1_report(dim: usize, p: f64, box_lengths: &[f64], spacing: f64) -> Result<Lemma1Report> {
    if dim != 2 && dim != 3 {
        return Err(SbpError::InvalidParameter(format!("dimension {dim}")));
    }
    if !(p >= 1.0) {
        return Err(SbpError::InvalidParameter(format!("L^p exponent {p} must be >= 1")));
    }
    if !(spacing > 0.0) || box_lengths.is_empty() {
        return Err(SbpError::InvalidParameter("need positive spacing and at least one box".into()));
    }
    if box_lengths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SbpError::InvalidParameter("box lengths must increase".into()));
    }
    let mut rows: Vec<Lemma1Row> = Vec::with_capacity(box_lengths.len());
    for &l in box_lengths {
        let norm = if p.is_infinite() {
            // K is radially decreasing with K(0) = 1
            1.0
        } else {
            let m = (l / spacing).round() as usize;
            let h = l / m as f64;
            let total = m.pow(dim as u32);
            let sum = par::sum(total, |i| {
                let mut r2 = 0.0;
                let mut idx = i;
                for _ in 0..dim {
                    let c = -0.5 * l + ((idx % m) as f64 + 0.5) * h;
                    r2 += c * c;
                    idx /= m;
                }
                screened(1.0, r2.sqrt()).powf(p)
            });
            (sum * h.powi(dim as i32)).powf(1.0 / p)
        };
        let (relative_change, log_slope) = match rows.last() {
            Some(prev) => (
                (norm - prev.norm).abs() / prev.norm,
                if p.is_infinite() {
                    0.0
                } else {
                    (norm.powf(p) - prev.norm.powf(p)) / (l / prev.box_length).ln()
                },
            ),
            None => (0.0, 0.0),
        };
        rows.push(Lemma1Row {
            box_length: l,
            norm,
            relative_change,
            log_slope,
        });
    }
    Ok(Lemma1Report {
        dim,
        p,
        spacing,
        rows,
        critical_log_slope: unit_sphere_area(dim),
    })
}

/// Convolution of a physical-space density held as a complex field's modulus
/// squared; convenience for the dynamics and diagnostics layers.
pub fn convolve_abs_sqr(mult: &KernelMultiplier, u: &[Complex64]) -> Result<Vec<f64>> {
    let rho: Vec<f64> = par::collect(u.len(), |i| u[i].norm_sqr());
    Ok(mult.convolve_values(&rho)?.0)
}

/// `O(N^2)` reference convolution `h^d sum_j K_s(x_i - x_j) rho_j` over the
/// unperiodized grid.
pub fn direct_convolution(grid: &GridSpec, kernel: Kernel, density: &[f64]) -> Result<Vec<f64>> {
    kernel.validate()?;
    if density.len() != grid.len() {
        return Err(SbpError::SizeMismatch {
            expected: grid.len(),
            found: density.len(),
        });
    }
    let rate = kernel.rate();
    let vol = grid.cell_volume();
    Ok(par::collect(grid.len(), |i| {
        let xi = grid.point(i);
        let mut acc = 0.0;
        for (j, &rho) in density.iter().enumerate() {
            let xj = grid.point(j);
            let r2: f64 = (0..3).map(|a| (xi[a] - xj[a]).powi(2)).sum();
            acc += screened(rate, r2.sqrt()) * rho;
        }
        acc * vol
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_values() {
        assert_eq!(kernel_value(&[0.0, 0.0]), 1.0);
        assert!((kernel_value(&[1.0, 0.0, 0.0]) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert_eq!(kernel_t_value(&[0.0, 0.0], 3.0).unwrap(), 6.0);
        assert!(kernel_t_value(&[1.0, 0.0], 0.0).is_err());
        let x = [0.3, -1.7];
        assert_eq!(kernel_t_value(&x, 0.5).unwrap(), kernel_value(&x));
        let far = kernel_t_value(&[40.0, 0.0], 1e3).unwrap();
        assert!((far - 1.0 / 40.0).abs() < 1e-15);
    }

    #[test]
    fn analytic_unit_frequency_3d() {
        let m = analytic_base_multiplier(3, 1.0);
        assert!((m - (2.0 / PI).sqrt() / 2.0).abs() < 1e-15);
        assert!((analytic_multiplier(3, 1.0, 1.0) - m).abs() < 1e-15);
        let m2 = analytic_multiplier(2, 1.0, 0.7);
        assert!((m2 - analytic_base_multiplier(2, 0.7)).abs() < 1e-14);
    }

    #[test]
    fn half_time_screening_is_base_kernel() {
        let g = GridSpec::new(2, 16, 8.0).unwrap();
        for mode in [MultiplierMode::Sampled, MultiplierMode::Analytic] {
            let a = KernelMultiplier::new(g, Kernel::Base, mode, 2).unwrap();
            let b = KernelMultiplier::new(g, Kernel::Screened(0.5), mode, 2).unwrap();
            assert_eq!(a.table(), b.table());
        }
    }

    #[test]
    fn sampled_table_is_real_transform_of_even_kernel() {
        // the transform of the symmetrized samples has no imaginary part
        let g = GridSpec::new(2, 16, 8.0).unwrap();
        let p = g.padded(2);
        let mut s = sampled_kernel(&p, 1.0);
        fft::forward_inplace(&p, &mut s);
        let max_im = s.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        assert!(max_im < 1e-13);
    }

    #[test]
    fn lemma1_infinity_norm_is_one() {
        let r = lemma1_report(2, f64::INFINITY, &[4.0, 8.0], 0.5).unwrap();
        assert!(r.rows.iter().all(|row| row.norm == 1.0));
    }
}
