use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SbpError};
use crate::grid::GridSpec;
use crate::par;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Space {
    Physical,
    Frequency,
}

/// Complex samples on a [`GridSpec`], tagged with the space they live in.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    grid: GridSpec,
    space: Space,
    data: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: GridSpec, space: Space) -> Self {
        Self {
            grid,
            space,
            data: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_vec(grid: GridSpec, space: Space, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(SbpError::SizeMismatch {
                expected: grid.len(),
                found: data.len(),
            });
        }
        Ok(Self { grid, space, data })
    }

    /// Samples `f` at every physical grid point.
    pub fn from_fn<F>(grid: GridSpec, f: F) -> Self
    where
        F: Fn([f64; 3]) -> Complex64 + Sync + Send,
    {
        Self {
            grid,
            space: Space::Physical,
            data: grid.physical_table(f),
        }
    }

    /// Samples `f` at every frequency grid point (DFT order).
    pub fn from_frequency_fn<F>(grid: GridSpec, f: F) -> Self
    where
        F: Fn([f64; 3]) -> Complex64 + Sync + Send,
    {
        Self {
            grid,
            space: Space::Frequency,
            data: grid.frequency_table(f),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn values(&self) -> &[Complex64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.data
    }

    pub(crate) fn set_space(&mut self, space: Space) {
        self.space = space;
    }

    pub fn expect_space(&self, space: Space) -> Result<()> {
        if self.space != space {
            return Err(SbpError::SpaceMismatch {
                expected: space,
                found: self.space,
            });
        }
        Ok(())
    }

    pub fn expect_compatible(&self, other: &ComplexField) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(SbpError::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        other.expect_space(self.space)
    }

    /// Measure of one sample in the field's own space.
    pub fn cell_volume(&self) -> f64 {
        match self.space {
            Space::Physical => self.grid.cell_volume(),
            Space::Frequency => self.grid.freq_cell_volume(),
        }
    }

    pub fn norm_sqr_sum(&self) -> f64 {
        let d = &self.data;
        par::sum(d.len(), |i| d[i].norm_sqr())
    }

    /// Discrete `L^2` norm with cell-volume weighting.
    pub fn l2_norm(&self) -> f64 {
        (self.norm_sqr_sum() * self.cell_volume()).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        let d = &self.data;
        par::max(d.len(), |i| d[i].norm())
    }

    pub fn map<F>(&self, f: F) -> ComplexField
    where
        F: Fn(usize, Complex64) -> Complex64 + Sync + Send,
    {
        let d = &self.data;
        Self {
            grid: self.grid,
            space: self.space,
            data: par::collect(d.len(), |i| f(i, d[i])),
        }
    }

    pub fn map_inplace<F>(&mut self, f: F)
    where
        F: Fn(usize, Complex64) -> Complex64 + Sync + Send,
    {
        par::update(&mut self.data, |i, v| *v = f(i, *v));
    }

    pub fn scale(&self, s: Complex64) -> ComplexField {
        self.map(|_, v| v * s)
    }

    pub fn sub(&self, other: &ComplexField) -> Result<ComplexField> {
        self.expect_compatible(other)?;
        let o = &other.data;
        Ok(self.map(|i, v| v - o[i]))
    }

    pub fn add(&self, other: &ComplexField) -> Result<ComplexField> {
        self.expect_compatible(other)?;
        let o = &other.data;
        Ok(self.map(|i, v| v + o[i]))
    }

    /// Pointwise product with a real field on the same grid.
    pub fn mul_real(&self, other: &RealField) -> Result<ComplexField> {
        if !self.grid.same_as(&other.grid) {
            return Err(SbpError::GridMismatch("real factor on a different grid".into()));
        }
        let o = &other.data;
        Ok(self.map(|i, v| v * o[i]))
    }

    pub fn abs_sqr(&self) -> RealField {
        let d = &self.data;
        RealField {
            grid: self.grid,
            data: par::collect(d.len(), |i| d[i].norm_sqr()),
        }
    }

    pub fn abs(&self) -> RealField {
        let d = &self.data;
        RealField {
            grid: self.grid,
            data: par::collect(d.len(), |i| d[i].norm()),
        }
    }

    /// `max |a - b| / max |a|` against another field.
    pub fn rel_linf_distance(&self, other: &ComplexField) -> Result<f64> {
        self.expect_compatible(other)?;
        let (a, b) = (&self.data, &other.data);
        let diff = par::max(a.len(), |i| (a[i] - b[i]).norm());
        let scale = self.linf_norm();
        Ok(if scale == 0.0 { diff } else { diff / scale })
    }

    /// `||a - b||_2 / ||a||_2`; plain difference norm when `a = 0`.
    pub fn rel_l2_distance(&self, other: &ComplexField) -> Result<f64> {
        self.expect_compatible(other)?;
        let (a, b) = (&self.data, &other.data);
        let diff = par::sum(a.len(), |i| (a[i] - b[i]).norm_sqr()).sqrt();
        let scale = self.norm_sqr_sum().sqrt();
        Ok(if scale == 0.0 { diff } else { diff / scale })
    }

    pub fn is_finite(&self) -> bool {
        self.norm_sqr_sum().is_finite()
    }
}

/// Real samples on a grid (densities, potentials, phase fields).
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    grid: GridSpec,
    data: Vec<f64>,
}

impl RealField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            data: vec![0.0; grid.len()],
        }
    }

    pub fn from_vec(grid: GridSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(SbpError::SizeMismatch {
                expected: grid.len(),
                found: data.len(),
            });
        }
        Ok(Self { grid, data })
    }

    pub fn from_fn<F>(grid: GridSpec, f: F) -> Self
    where
        F: Fn([f64; 3]) -> f64 + Sync + Send,
    {
        Self {
            grid,
            data: grid.physical_table(f),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<f64> {
        self.data
    }

    pub fn linf_norm(&self) -> f64 {
        let d = &self.data;
        par::max(d.len(), |i| d[i].abs())
    }

    pub fn map<F>(&self, f: F) -> RealField
    where
        F: Fn(usize, f64) -> f64 + Sync + Send,
    {
        let d = &self.data;
        Self {
            grid: self.grid,
            data: par::collect(d.len(), |i| f(i, d[i])),
        }
    }

    pub fn to_complex(&self, space: Space) -> ComplexField {
        let d = &self.data;
        ComplexField {
            grid: self.grid,
            space,
            data: par::collect(d.len(), |i| Complex64::new(d[i], 0.0)),
        }
    }
}

/// Permutes axis indices by `n/2`. Applied to a DFT-ordered table this gives
/// the centered layout (index `c` holds wavenumber `c - n/2`); the map is its
/// own inverse for even `n`.
pub fn fftshift<T: Copy + Send + Sync + Default>(grid: &GridSpec, data: &[T]) -> Vec<T> {
    let n = grid.n();
    let half = n / 2;
    par::collect(data.len(), |i| {
        let mut ix = grid.unflatten(i);
        for a in ix.iter_mut().take(grid.dim()) {
            *a = (*a + half) % n;
        }
        data[grid.flatten(ix)]
    })
}
