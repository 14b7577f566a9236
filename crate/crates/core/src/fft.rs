//! Multi-dimensional transforms scaled to the unitary continuum convention
//! `F[f](xi) = (2 pi)^{-d/2} \int e^{-i x.xi} f(x) dx`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::Result;
use crate::field::{ComplexField, Space};
use crate::grid::GridSpec;
use crate::par;

type Plan = Arc<dyn Fft<f64>>;

fn plan(n: usize, direction: FftDirection) -> Plan {
    static CACHE: OnceLock<Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Plan>)>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    let (planner, plans) = &mut *guard;
    let key = (n, direction == FftDirection::Forward);
    plans
        .entry(key)
        .or_insert_with(|| planner.plan_fft(n, direction))
        .clone()
}

/// Unnormalized in-place DFT over every axis of a row-major `n^dim` array.
pub fn dft_nd(data: &mut [Complex64], dim: usize, n: usize, direction: FftDirection) {
    debug_assert_eq!(data.len(), n.pow(dim as u32));
    let fft = plan(n, direction);
    let scratch_len = fft.get_inplace_scratch_len();
    let rows = |data: &mut [Complex64]| {
        par::update_chunks_with(
            data,
            n,
            || vec![Complex64::default(); scratch_len],
            |scratch, _, row| fft.process_with_scratch(row, scratch),
        );
    };

    // last axis: contiguous rows
    rows(data);
    if dim == 1 {
        return;
    }
    // remaining axes: gather lines into contiguous rows, transform, scatter
    let total = data.len();
    let mut buf = vec![Complex64::default(); total];
    for axis in (0..dim - 1).rev() {
        let inner = n.pow((dim - 1 - axis) as u32);
        let block = n * inner;
        {
            let src: &[Complex64] = data;
            // buf row r = (outer, i) holds src[outer*block + k*inner + i], k = 0..n
            par::update_chunks(&mut buf, n, |r, row| {
                let outer = r / inner;
                let i = r % inner;
                let base = outer * block + i;
                for (k, v) in row.iter_mut().enumerate() {
                    *v = src[base + k * inner];
                }
            });
        }
        rows(&mut buf);
        {
            let src: &[Complex64] = &buf;
            // data row (outer, k) of length `inner`
            par::update_chunks(data, inner, |r, row| {
                let outer = r / n;
                let k = r % n;
                let base = outer * block;
                for (i, v) in row.iter_mut().enumerate() {
                    *v = src[base + i * n + k];
                }
            });
        }
    }
}

/// `(-1)^{k_1 + ... + k_d}`: phase from placing the first sample at `-L/2`.
#[inline]
fn centering_sign(grid: &GridSpec, idx: usize) -> f64 {
    let ix = grid.unflatten(idx);
    let s: usize = ix.iter().take(grid.dim()).sum();
    if s % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// In-place forward transform of raw physical samples.
pub fn forward_inplace(grid: &GridSpec, data: &mut [Complex64]) {
    dft_nd(data, grid.dim(), grid.n(), FftDirection::Forward);
    let scale = grid.cell_volume() * (2.0 * PI).powf(-(grid.dim() as f64) / 2.0);
    par::update(data, |i, v| *v *= scale * centering_sign(grid, i));
}

/// In-place inverse transform of raw frequency samples (DFT order).
pub fn inverse_inplace(grid: &GridSpec, data: &mut [Complex64]) {
    par::update(data, |i, v| *v *= centering_sign(grid, i));
    dft_nd(data, grid.dim(), grid.n(), FftDirection::Inverse);
    let scale = grid.freq_cell_volume() * (2.0 * PI).powf(-(grid.dim() as f64) / 2.0);
    par::update(data, |_, v| *v *= scale);
}

/// Physical -> frequency.
pub fn fft(field: &ComplexField) -> Result<ComplexField> {
    let mut out = field.clone();
    fft_inplace(&mut out)?;
    Ok(out)
}

/// Frequency -> physical.
pub fn ifft(field: &ComplexField) -> Result<ComplexField> {
    let mut out = field.clone();
    ifft_inplace(&mut out)?;
    Ok(out)
}

pub fn fft_inplace(field: &mut ComplexField) -> Result<()> {
    field.expect_space(Space::Physical)?;
    let grid = *field.grid();
    forward_inplace(&grid, field.values_mut());
    field.set_space(Space::Frequency);
    Ok(())
}

pub fn ifft_inplace(field: &mut ComplexField) -> Result<()> {
    field.expect_space(Space::Frequency)?;
    let grid = *field.grid();
    inverse_inplace(&grid, field.values_mut());
    field.set_space(Space::Physical);
    Ok(())
}
