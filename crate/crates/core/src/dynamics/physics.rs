use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Couplings, DataFamily, SimConfig};
use crate::error::{Result, SbpError};
use crate::fft;
use crate::field::{ComplexField, Space};
use crate::grid::{norm2, GridSpec};
use crate::interp::EDGE_BAND;
use crate::kernel::{Kernel, KernelMultiplier};
use crate::par;
use crate::propagator::free_phase;
use crate::snapshot;
use crate::spectral;
use crate::verify::random_smooth_field;

/// `|u|^{2/d}` from `rho = |u|^2`, taken as 0 at 0.
#[inline]
pub fn local_power(dim: usize, rho: f64) -> f64 {
    match dim {
        2 => rho.sqrt(),
        _ => rho.cbrt(),
    }
}

/// The real potential `V[u] = hartree K*|u|^2 - local |u|^{2/d}`.
#[derive(Clone, Debug)]
pub struct Nonlinearity {
    dim: usize,
    couplings: Couplings,
    kernel: Option<KernelMultiplier>,
}

impl Nonlinearity {
    pub fn new(grid: GridSpec, couplings: Couplings, pad_factor: usize) -> Result<Self> {
        let kernel = if couplings.hartree != 0.0 {
            Some(KernelMultiplier::new(
                grid,
                Kernel::Base,
                crate::kernel::MultiplierMode::Sampled,
                pad_factor,
            )?)
        } else {
            None
        };
        Ok(Self {
            dim: grid.dim(),
            couplings,
            kernel,
        })
    }

    pub fn couplings(&self) -> Couplings {
        self.couplings
    }

    pub fn density(u: &[Complex64]) -> Vec<f64> {
        par::collect(u.len(), |i| u[i].norm_sqr())
    }

    /// `K * |u|^2`, or zeros when the Hartree term is off.
    pub fn hartree(&self, rho: &[f64]) -> Result<Vec<f64>> {
        match &self.kernel {
            Some(k) => Ok(k.convolve_values(rho)?.0),
            None => Ok(vec![0.0; rho.len()]),
        }
    }

    pub fn potential_values(&self, u: &[Complex64]) -> Result<Vec<f64>> {
        if self.couplings.is_linear() {
            return Ok(vec![0.0; u.len()]);
        }
        let rho = Self::density(u);
        let mut v = self.hartree(&rho)?;
        let (a, b, d) = (self.couplings.hartree, self.couplings.local, self.dim);
        par::update(&mut v, |i, x| *x = a * *x - b * local_power(d, rho[i]));
        Ok(v)
    }

    pub fn potential(&self, u: &ComplexField) -> Result<crate::field::RealField> {
        u.expect_space(Space::Physical)?;
        crate::field::RealField::from_vec(*u.grid(), self.potential_values(u.values())?)
    }

    /// `u <- exp(-i dt V[u]) u`. Exact: `|u|` and hence `V` do not change
    /// along this substep.
    pub fn apply_phase(&self, u: &mut [Complex64], dt: f64) -> Result<()> {
        if self.couplings.is_linear() {
            return Ok(());
        }
        let v = self.potential_values(u)?;
        par::update(u, |i, z| *z *= Complex64::from_polar(1.0, -dt * v[i]));
        Ok(())
    }
}

/// Convenience wrapper with full couplings and padding 2.
pub fn nonlinear_potential(u: &ComplexField) -> Result<crate::field::RealField> {
    Nonlinearity::new(*u.grid(), Couplings::FULL, 2)?.potential(u)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conserved {
    pub mass: f64,
    pub energy: f64,
}

/// Kinetic energy `int |grad u|^2`, evaluated as `int |xi|^2 |u_hat|^2`.
pub fn kinetic_energy(u_hat: &ComplexField) -> Result<f64> {
    u_hat.expect_space(Space::Frequency)?;
    let g = *u_hat.grid();
    let d = u_hat.values();
    Ok(par::sum(d.len(), |i| norm2(&g.frequency(i)) * d[i].norm_sqr()) * g.freq_cell_volume())
}

impl Nonlinearity {
    /// `E = int |grad u|^2 + 1/2 int (K*|u|^2)|u|^2 - d/(d+1) int |u|^{2+2/d}`,
    /// with each nonlinear term scaled by its coupling.
    pub fn conserved(&self, u: &ComplexField) -> Result<Conserved> {
        u.expect_space(Space::Physical)?;
        let g = *u.grid();
        let hat = fft::fft(u)?;
        let kinetic = kinetic_energy(&hat)?;
        let rho = Self::density(u.values());
        let conv = self.hartree(&rho)?;
        let d = self.dim as f64;
        let dim = self.dim;
        let (a, b) = (self.couplings.hartree, self.couplings.local);
        let potential = par::sum(rho.len(), |i| {
            0.5 * a * conv[i] * rho[i] - b * d / (d + 1.0) * rho[i] * local_power(dim, rho[i])
        });
        let mass = par::sum(rho.len(), |i| rho[i]) * g.cell_volume();
        Ok(Conserved {
            mass,
            energy: kinetic + potential * g.cell_volume(),
        })
    }

    /// `-Delta u + V[u] u`: the variational derivative of the energy in `conj(u)`.
    pub fn energy_gradient(&self, u: &ComplexField) -> Result<ComplexField> {
        let g = *u.grid();
        let lap = g.frequency_table(|xi| norm2(&xi));
        let mut out = spectral::apply_multiplier(u, spectral::Multiplier::Real(&lap))?;
        let v = self.potential_values(u.values())?;
        let src = u.values();
        par::update(out.values_mut(), |i, z| *z += v[i] * src[i]);
        Ok(out)
    }

    /// Relative gap between the centered difference `(E(u + s v) - E(u - s v)) / 2s`
    /// and the pairing `2 Re <grad E, v>`.
    pub fn variational_defect(&self, u: &ComplexField, v: &ComplexField, s: f64) -> Result<f64> {
        u.expect_compatible(v)?;
        let grad = self.energy_gradient(u)?;
        let shift = v.scale(Complex64::new(s, 0.0));
        let ep = self.conserved(&u.add(&shift)?)?.energy;
        let em = self.conserved(&u.sub(&shift)?)?.energy;
        let fd = (ep - em) / (2.0 * s);
        let (gv, vv) = (grad.values(), v.values());
        let pairing = par::sum(gv.len(), |i| 2.0 * (gv[i] * vv[i].conj()).re) * u.cell_volume();
        Ok((fd - pairing).abs() / pairing.abs().max(f64::MIN_POSITIVE))
    }
}

pub fn conserved_quantities(u: &ComplexField) -> Result<Conserved> {
    Nonlinearity::new(*u.grid(), Couplings::FULL, 2)?.conserved(u)
}

/// Builds the family member and rescales it to `||u0||_{H^{gamma,gamma}} = eps`.
pub fn prepare_initial_data(config: &SimConfig) -> Result<ComplexField> {
    config.validate()?;
    let grid = config.grid()?;
    let raw = match &config.family {
        DataFamily::Gaussian { width, center, modulation } => {
            let dim = grid.dim();
            let c: Vec<f64> = (0..dim).map(|a| center.get(a).copied().unwrap_or(0.0)).collect();
            let k: Vec<f64> = (0..dim).map(|a| modulation.get(a).copied().unwrap_or(0.0)).collect();
            let w2 = 2.0 * width * width;
            ComplexField::from_fn(grid, |x| {
                let mut r2 = 0.0;
                let mut ph = 0.0;
                for a in 0..dim {
                    r2 += (x[a] - c[a]).powi(2);
                    ph += k[a] * x[a];
                }
                Complex64::from_polar((-r2 / w2).exp(), ph)
            })
        }
        DataFamily::RandomBumps { count } => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            random_smooth_field(&grid, &mut rng, *count)
        }
        DataFamily::Snapshot { path } => {
            let (field, _) = snapshot::load(path)?;
            if !field.grid().same_as(&grid) {
                return Err(SbpError::GridMismatch(format!(
                    "snapshot grid {:?} does not match configured {:?}",
                    field.grid(),
                    grid
                )));
            }
            match field.space() {
                Space::Physical => field,
                Space::Frequency => fft::ifft(&field)?,
            }
        }
    };
    let norm = spectral::norms(&raw, config.gamma, None)?.weighted_sobolev();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(SbpError::InvalidParameter(format!("initial data has norm {norm}")));
    }
    Ok(raw.scale(Complex64::new(config.eps / norm, 0.0)))
}

/// Smallest radius (from the box center) holding `quantile` of the mass.
pub fn mass_radius(u: &ComplexField, quantile: f64) -> f64 {
    let g = *u.grid();
    let pts: Vec<(f64, f64)> = (0..g.len())
        .map(|i| {
            let r = match u.space() {
                Space::Physical => norm2(&g.point(i)).sqrt(),
                Space::Frequency => norm2(&g.frequency(i)).sqrt(),
            };
            (r, u.values()[i].norm_sqr())
        })
        .collect();
    quantile_radius(pts, quantile)
}

fn quantile_radius(mut pts: Vec<(f64, f64)>, quantile: f64) -> f64 {
    let total: f64 = pts.iter().map(|p| p.1).sum();
    if total == 0.0 {
        return 0.0;
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    for (r, m) in &pts {
        acc += m;
        if acc >= quantile * total {
            return *r;
        }
    }
    pts.last().map_or(0.0, |p| p.0)
}

/// Mass fraction in the outer band `max_i |x_i| >= (L/2)(1 - 1/32)`.
pub fn boundary_mass_fraction(u: &ComplexField) -> f64 {
    crate::interp::edge_mass_fraction(u.grid(), u.values(), EDGE_BAND)
}

/// Spectral energy fraction with some `|k_i| > n/4`.
pub fn top_octave_fraction(u_hat: &ComplexField) -> f64 {
    let g = *u_hat.grid();
    let d = u_hat.values();
    let quarter = (g.n() / 4) as i64;
    let total = par::sum(d.len(), |i| d[i].norm_sqr());
    if total == 0.0 {
        return 0.0;
    }
    let tail = par::sum(d.len(), |i| {
        let k = g.wavevector_index(i);
        if k.iter().take(g.dim()).any(|c| c.abs() > quarter) {
            d[i].norm_sqr()
        } else {
            0.0
        }
    });
    tail / total
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preflight {
    pub mass_radius: f64,
    pub max_speed: f64,
    pub required_box: f64,
    pub box_length: f64,
    pub boundary_mass: f64,
    pub top_octave: f64,
}

impl Preflight {
    pub fn measure(config: &SimConfig, u0: &ComplexField) -> Result<Self> {
        let q = config.guards.radius_quantile;
        let hat = fft::fft(u0)?;
        let x0 = mass_radius(u0, q);
        let v = 2.0 * mass_radius(&hat, q);
        Ok(Self {
            mass_radius: x0,
            max_speed: v,
            required_box: config.guards.box_safety * (x0 + v * config.t_end),
            box_length: config.box_length,
            boundary_mass: boundary_mass_fraction(u0),
            top_octave: top_octave_fraction(&hat),
        })
    }

    pub fn check(&self, config: &SimConfig) -> Result<()> {
        if self.box_length < self.required_box {
            return Err(SbpError::BoxTooSmall(format!(
                "L = {} below required {:.3} (mass radius {:.3}, speed {:.3}, t_end {})",
                self.box_length, self.required_box, self.mass_radius, self.max_speed, config.t_end
            )));
        }
        if self.boundary_mass > config.guards.boundary_tolerance {
            return Err(SbpError::BoxTooSmall(format!(
                "initial boundary mass fraction {:.3e}",
                self.boundary_mass
            )));
        }
        if self.top_octave > config.guards.tail_tolerance {
            return Err(SbpError::UnderResolved(format!(
                "top-octave spectral fraction {:.3e} exceeds {:.1e}",
                self.top_octave, config.guards.tail_tolerance
            )));
        }
        Ok(())
    }
}

/// Smallest box passing the preflight rule for data that is already
/// sampled on `grid` (the radii do not depend on `L` once the data is
/// resolved and localized).
pub fn required_box_length(config: &SimConfig, u0: &ComplexField) -> Result<f64> {
    Ok(Preflight::measure(config, u0)?.required_box)
}

/// Exact-phase Strang splitting: half free step, potential phase, half free step.
#[derive(Clone, Debug)]
pub struct Stepper {
    grid: GridSpec,
    dt: f64,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    nonlinearity: Nonlinearity,
}

impl Stepper {
    pub fn new(grid: GridSpec, dt: f64, couplings: Couplings, pad_factor: usize) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(SbpError::InvalidParameter(format!("dt = {dt} must be positive")));
        }
        Ok(Self {
            grid,
            dt,
            half: free_phase(&grid, 0.5 * dt),
            full: free_phase(&grid, dt),
            nonlinearity: Nonlinearity::new(grid, couplings, pad_factor)?,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    pub(crate) fn half_phase(&self) -> &[Complex64] {
        &self.half
    }

    pub(crate) fn full_phase(&self) -> &[Complex64] {
        &self.full
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// One Strang step on a physical field.
    pub fn step(&self, u: &mut ComplexField) -> Result<()> {
        u.expect_space(Space::Physical)?;
        let g = self.grid;
        let data = u.values_mut();
        let half = &self.half;
        fft::forward_inplace(&g, data);
        par::update(data, |i, z| *z *= half[i]);
        fft::inverse_inplace(&g, data);
        self.nonlinearity.apply_phase(data, self.dt)?;
        fft::forward_inplace(&g, data);
        par::update(data, |i, z| *z *= half[i]);
        fft::inverse_inplace(&g, data);
        Ok(())
    }
}

pub fn step_strang(u: &ComplexField, dt: f64) -> Result<ComplexField> {
    let mut out = u.clone();
    Stepper::new(*u.grid(), dt, Couplings::FULL, 2)?.step(&mut out)?;
    if !out.is_finite() {
        return Err(SbpError::NumericalAbort {
            t: dt,
            reason: "non-finite field after step".into(),
        });
    }
    Ok(out)
}
