//! Band-limited resampling of grid data onto tensor-product target points.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Result, SbpError};
use crate::grid::GridSpec;
use crate::par;

/// Periodic Dirichlet kernel for `n` equispaced samples, `theta` in radians
/// of the period. Equals 1 at `theta = 0` and vanishes at the other nodes.
#[inline]
pub fn dirichlet(n: usize, theta: f64) -> f64 {
    let half = 0.5 * theta;
    let s = half.sin();
    if s.abs() < 1e-14 {
        return 1.0;
    }
    (n as f64 * half).sin() * half.cos() / (s * n as f64)
}

/// Dense `targets x n` interpolation matrix for one axis of `grid`.
/// Rows for targets outside `[-L/2, L/2)` are zero.
pub fn axis_matrix(grid: &GridSpec, targets: &[f64]) -> Vec<f64> {
    let n = grid.n();
    let l = grid.box_length();
    let h = grid.spacing();
    let mut m = vec![0.0; targets.len() * n];
    par::update_chunks(&mut m, n, |r, row| {
        let s = targets[r];
        if s < -0.5 * l || s >= 0.5 * l {
            return;
        }
        // exact node hit: avoid cancellation
        let pos = (s + 0.5 * l) / h;
        let nearest = pos.round();
        if (pos - nearest).abs() < 1e-12 && (nearest as usize) < n {
            row[nearest as usize] = 1.0;
            return;
        }
        for (j, w) in row.iter_mut().enumerate() {
            *w = dirichlet(n, 2.0 * PI * (s - grid.coord(j)) / l);
        }
    });
    m
}

/// Applies `mat` (`m x n`) along `axis` of row-major data with the given shape.
fn apply_axis(data: &[Complex64], shape: &[usize], axis: usize, mat: &[f64], m: usize) -> Vec<Complex64> {
    let n = shape[axis];
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![Complex64::default(); outer * m * inner];
    if inner == 1 {
        par::update_chunks(&mut out, m, |o, row| {
            let src = &data[o * n..(o + 1) * n];
            for (k, v) in row.iter_mut().enumerate() {
                let a = &mat[k * n..(k + 1) * n];
                let mut acc = Complex64::default();
                for j in 0..n {
                    if a[j] != 0.0 {
                        acc += src[j] * a[j];
                    }
                }
                *v = acc;
            }
        });
    } else {
        par::update_chunks(&mut out, inner, |r, row| {
            let o = r / m;
            let k = r % m;
            let a = &mat[k * n..(k + 1) * n];
            for j in 0..n {
                let w = a[j];
                if w == 0.0 {
                    continue;
                }
                let src = &data[(o * n + j) * inner..(o * n + j + 1) * inner];
                for (v, s) in row.iter_mut().zip(src) {
                    *v += s * w;
                }
            }
        });
    }
    out
}

/// Fraction of `|f|^2` in the outer band `max_i |x_i| >= (L/2)(1 - band)`.
pub fn edge_mass_fraction(grid: &GridSpec, data: &[Complex64], band: f64) -> f64 {
    let cut = 0.5 * grid.box_length() * (1.0 - band);
    let total = par::sum(data.len(), |i| data[i].norm_sqr());
    if total == 0.0 {
        return 0.0;
    }
    let edge = par::sum(data.len(), |i| {
        let x = grid.point(i);
        if x.iter().take(grid.dim()).any(|c| c.abs() >= cut) {
            data[i].norm_sqr()
        } else {
            0.0
        }
    });
    edge / total
}

/// Outer band width used by the edge-mass guard, as a fraction of `L/2`.
pub const EDGE_BAND: f64 = 1.0 / 32.0;

/// Evaluates the trigonometric interpolant of `data` (physical layout on
/// `grid`) at the tensor grid `targets[0] x ... x targets[dim-1]`.
///
/// Targets outside the box receive 0. If any target falls outside and the
/// source carries more than `edge_tolerance` of its mass near the box edge,
/// the truncation would be visible and an error is returned instead.
pub fn resample(
    grid: &GridSpec,
    data: &[Complex64],
    targets: &[Vec<f64>],
    edge_tolerance: f64,
) -> Result<Vec<Complex64>> {
    if data.len() != grid.len() {
        return Err(SbpError::SizeMismatch {
            expected: grid.len(),
            found: data.len(),
        });
    }
    if targets.len() != grid.dim() {
        return Err(SbpError::InvalidParameter(format!(
            "{} target axes for a {}-dimensional grid",
            targets.len(),
            grid.dim()
        )));
    }
    let half = 0.5 * grid.box_length();
    let outside = targets
        .iter()
        .flatten()
        .any(|&s| s < -half || s >= half);
    if outside {
        let edge = edge_mass_fraction(grid, data, EDGE_BAND);
        if edge > edge_tolerance {
            return Err(SbpError::OutsideBox { edge_fraction: edge });
        }
    }
    let mut shape: Vec<usize> = vec![grid.n(); grid.dim()];
    let mut cur = data.to_vec();
    for (axis, t) in targets.iter().enumerate() {
        let mat = axis_matrix(grid, t);
        cur = apply_axis(&cur, &shape, axis, &mat, t.len());
        shape[axis] = t.len();
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_trigonometric_polynomial_off_grid() {
        let g = GridSpec::new(2, 16, 2.0 * PI).unwrap();
        let f = |x: f64, y: f64| Complex64::new((3.0 * x).cos() + (2.0 * y).sin(), (x + 4.0 * y).sin());
        let data: Vec<Complex64> = (0..g.len())
            .map(|i| {
                let p = g.point(i);
                f(p[0], p[1])
            })
            .collect();
        let tx = vec![-1.234, 0.1, 2.9];
        let ty = vec![0.77, -3.0];
        let out = resample(&g, &data, &[tx.clone(), ty.clone()], 1.0).unwrap();
        for (a, &x) in tx.iter().enumerate() {
            for (b, &y) in ty.iter().enumerate() {
                assert!((out[a * ty.len() + b] - f(x, y)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn outside_targets_zero_or_rejected() {
        let g = GridSpec::new(2, 8, 8.0).unwrap();
        let flat = vec![Complex64::new(1.0, 0.0); g.len()];
        assert!(resample(&g, &flat, &[vec![10.0], vec![0.0]], 1e-6).is_err());
        let out = resample(&g, &flat, &[vec![10.0, 0.0], vec![0.0]], 1.0).unwrap();
        assert_eq!(out[0], Complex64::default());
        assert!((out[1] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }
}
