use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SbpError};

/// Uniform periodic grid on the box `[-L/2, L/2)^dim`.
///
/// Physical samples sit at `x_j = -L/2 + j h`, `j = 0..n`, so the origin is
/// index `n/2`. Frequency samples are stored in standard DFT order: index `m`
/// carries wavenumber `k = m` for `m < n/2` and `k = m - n` otherwise, at
/// `xi = 2 pi k / L`. The single Nyquist mode is `k = -n/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    n: usize,
    box_length: f64,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize, box_length: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(SbpError::InvalidGrid(format!("dimension {dim} not in {{2, 3}}")));
        }
        if !n.is_power_of_two() || n < 8 {
            return Err(SbpError::InvalidGrid(format!(
                "{n} points per axis; need a power of two >= 8"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(SbpError::InvalidGrid(format!("box length {box_length} must be positive")));
        }
        Ok(Self { dim, n, box_length })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Total number of grid points, `n^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    pub fn freq_spacing(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn freq_cell_volume(&self) -> f64 {
        self.freq_spacing().powi(self.dim as i32)
    }

    /// Largest resolved wavenumber, `pi n / L`.
    pub fn nyquist(&self) -> f64 {
        PI / self.spacing()
    }

    /// Same resolution, box enlarged by `factor` (used for zero padding).
    pub fn padded(&self, factor: usize) -> Self {
        Self {
            dim: self.dim,
            n: self.n * factor,
            box_length: self.box_length * factor as f64,
        }
    }

    /// The frequency lattice read as a physical grid (spacing `2 pi / L`),
    /// in the centered layout obtained by [`crate::field::fftshift`].
    pub fn dual(&self) -> Self {
        Self {
            dim: self.dim,
            n: self.n,
            box_length: self.n as f64 * self.freq_spacing(),
        }
    }

    /// Integer wavenumber of DFT index `m`.
    pub fn wavenumber_index(&self, m: usize) -> i64 {
        if m < self.n / 2 {
            m as i64
        } else {
            m as i64 - self.n as i64
        }
    }

    pub fn coord(&self, j: usize) -> f64 {
        -0.5 * self.box_length + j as f64 * self.spacing()
    }

    pub fn wavenumber(&self, m: usize) -> f64 {
        self.wavenumber_index(m) as f64 * self.freq_spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.coord(j)).collect()
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.wavenumber(m)).collect()
    }

    /// Splits a flat row-major index into per-axis indices (unused axes are 0).
    #[inline]
    pub fn unflatten(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for a in (0..self.dim).rev() {
            out[a] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    #[inline]
    pub fn flatten(&self, ix: [usize; 3]) -> usize {
        let mut idx = 0;
        for &i in ix.iter().take(self.dim) {
            idx = idx * self.n + i;
        }
        idx
    }

    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let ix = self.unflatten(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.coord(ix[a]);
        }
        x
    }

    #[inline]
    pub fn frequency(&self, idx: usize) -> [f64; 3] {
        let ix = self.unflatten(idx);
        let mut xi = [0.0; 3];
        for a in 0..self.dim {
            xi[a] = self.wavenumber(ix[a]);
        }
        xi
    }

    /// Integer wavenumbers of a flat frequency index.
    #[inline]
    pub fn wavevector_index(&self, idx: usize) -> [i64; 3] {
        let ix = self.unflatten(idx);
        let mut k = [0i64; 3];
        for a in 0..self.dim {
            k[a] = self.wavenumber_index(ix[a]);
        }
        k
    }

    /// Frequency table in DFT order built from a function of `xi`.
    pub fn frequency_table<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send + Default + Clone,
        F: Fn([f64; 3]) -> T + Sync + Send,
    {
        crate::par::collect(self.len(), |i| f(self.frequency(i)))
    }

    /// Physical-space table built from a function of `x`.
    pub fn physical_table<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send + Default + Clone,
        F: Fn([f64; 3]) -> T + Sync + Send,
    {
        crate::par::collect(self.len(), |i| f(self.point(i)))
    }

    pub fn same_as(&self, other: &GridSpec) -> bool {
        self.dim == other.dim && self.n == other.n && self.box_length == other.box_length
    }
}

#[inline]
pub fn norm2(v: &[f64; 3]) -> f64 {
    v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_examples() {
        let g = GridSpec::new(2, 8, 16.0).unwrap();
        assert_eq!(g.spacing(), 2.0);
        assert!((g.freq_spacing() - PI / 8.0).abs() < 1e-15);

        let g = GridSpec::new(3, 8, 8.0).unwrap();
        assert_eq!(g.len(), 512);
        assert_eq!(g.cell_volume(), 1.0);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(2, 7, 16.0).is_err());
        assert!(GridSpec::new(4, 8, 16.0).is_err());
        assert!(GridSpec::new(1, 8, 16.0).is_err());
        assert!(GridSpec::new(2, 4, 16.0).is_err());
        assert!(GridSpec::new(2, 8, 0.0).is_err());
    }

    #[test]
    fn frequency_layout_is_symmetric_up_to_nyquist() {
        let g = GridSpec::new(2, 16, 10.0).unwrap();
        let mut k: Vec<i64> = (0..16).map(|m| g.wavenumber_index(m)).collect();
        assert_eq!(k[0], 0);
        assert_eq!(k[8], -8);
        k.sort();
        assert_eq!(k, (-8..8).collect::<Vec<_>>());
        assert!((g.coord(8)).abs() < 1e-15);
        assert!((g.spacing() * g.n() as f64 - g.box_length()).abs() < 1e-15);
    }

    #[test]
    fn flat_index_roundtrip() {
        let g = GridSpec::new(3, 8, 1.0).unwrap();
        for idx in [0, 1, 7, 8, 63, 64, 511] {
            assert_eq!(g.flatten(g.unflatten(idx)), idx);
        }
    }
}
