use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SbpError};
use crate::grid::GridSpec;

/// Default regularity index `1/2 + (d^2 + 4) / 4d`: 3/2 in 2D, 19/12 in 3D.
pub fn default_gamma(dim: usize) -> f64 {
    let d = dim as f64;
    0.5 + (d * d + 4.0) / (4.0 * d)
}

/// Open interval `(d/2, 1 + 2/d)` of admissible regularity indices.
pub fn gamma_range(dim: usize) -> (f64, f64) {
    let d = dim as f64;
    (d / 2.0, 1.0 + 2.0 / d)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DataFamily {
    /// `exp(-|x - c|^2 / 2w^2 + i k.x)`
    Gaussian {
        width: f64,
        center: Vec<f64>,
        modulation: Vec<f64>,
    },
    /// Random superposition of Gaussian bumps drawn from the run seed.
    RandomBumps { count: usize },
    /// A stored field in the snapshot format.
    Snapshot { path: PathBuf },
}

impl DataFamily {
    pub fn centered_gaussian(width: f64) -> Self {
        DataFamily::Gaussian {
            width,
            center: Vec::new(),
            modulation: Vec::new(),
        }
    }
}

/// Strengths of the two nonlinear terms: `V = hartree K*|u|^2 - local |u|^{2/d}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    pub hartree: f64,
    pub local: f64,
}

impl Couplings {
    pub const FULL: Couplings = Couplings {
        hartree: 1.0,
        local: 1.0,
    };
    pub const LINEAR: Couplings = Couplings {
        hartree: 0.0,
        local: 0.0,
    };

    pub fn is_linear(&self) -> bool {
        self.hartree == 0.0 && self.local == 0.0
    }
}

impl Default for Couplings {
    fn default() -> Self {
        Self::FULL
    }
}

/// Box and resolution guards applied before and during a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Guards {
    /// Required `L / (x0 + v_max t_end)`; 0 disables the box preflight.
    pub box_safety: f64,
    /// Mass fraction that defines the radii `x0` and `v_max / 2`.
    pub radius_quantile: f64,
    /// Abort when the mass in the outer band exceeds this fraction.
    pub boundary_tolerance: f64,
    /// Required bound on the spectral energy fraction in the top octave.
    pub tail_tolerance: f64,
}

impl Default for Guards {
    fn default() -> Self {
        Self {
            box_safety: 2.1,
            radius_quantile: 0.99999,
            boundary_tolerance: 1e-6,
            tail_tolerance: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dim: usize,
    pub n: usize,
    pub box_length: f64,
    /// Target `H^{gamma,gamma}` norm of the initial data.
    pub eps: f64,
    pub gamma: f64,
    pub dt: f64,
    pub t_end: f64,
    pub family: DataFamily,
    /// Emit a snapshot every this many steps (0: only at the ends).
    pub snapshot_stride: u64,
    /// Extra snapshots at `2^{k/m}`, `m` per octave, for `t >= 1`.
    pub log_snapshots_per_octave: u32,
    /// Write a checkpoint every this many steps (0: never). Checkpoint
    /// steps are always snapshot steps.
    pub checkpoint_stride: u64,
    pub seed: u64,
    pub couplings: Couplings,
    pub pad_factor: usize,
    pub guards: Guards,
}

impl SimConfig {
    /// Config with defaults for everything but the grid, size and time span.
    pub fn new(dim: usize, n: usize, box_length: f64, eps: f64, dt: f64, t_end: f64) -> Self {
        Self {
            dim,
            n,
            box_length,
            eps,
            gamma: default_gamma(dim),
            dt,
            t_end,
            family: DataFamily::centered_gaussian(1.0),
            snapshot_stride: 0,
            log_snapshots_per_octave: 0,
            checkpoint_stride: 0,
            seed: 0,
            couplings: Couplings::FULL,
            pad_factor: 2,
            guards: Guards::default(),
        }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.dim, self.n, self.box_length)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        let (lo, hi) = gamma_range(self.dim);
        if !(self.gamma > lo && self.gamma < hi) {
            return Err(SbpError::InvalidParameter(format!(
                "gamma = {} outside ({lo}, {hi}) for d = {}",
                self.gamma, self.dim
            )));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(SbpError::InvalidParameter(format!("eps = {} must be positive", self.eps)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SbpError::InvalidParameter(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(SbpError::InvalidParameter(format!("t_end = {} must be >= 0", self.t_end)));
        }
        if self.pad_factor == 0 {
            return Err(SbpError::InvalidParameter("pad_factor must be >= 1".into()));
        }
        if let DataFamily::Gaussian { width, center, modulation } = &self.family {
            if !(*width > 0.0 && width.is_finite()) {
                return Err(SbpError::InvalidParameter(format!("gaussian width {width} must be positive")));
            }
            if center.len() > self.dim || modulation.len() > self.dim {
                return Err(SbpError::InvalidParameter(
                    "gaussian center/modulation has more components than dimensions".into(),
                ));
            }
        }
        if let DataFamily::RandomBumps { count } = self.family {
            if count == 0 {
                return Err(SbpError::InvalidParameter("random family needs at least one bump".into()));
            }
        }
        Ok(())
    }

    pub fn total_steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    /// Step indices at which a snapshot is emitted, always including the
    /// first and last step.
    pub fn snapshot_steps(&self) -> Vec<u64> {
        let total = self.total_steps();
        let mut steps = vec![0, total];
        if self.snapshot_stride > 0 {
            steps.extend((0..=total).step_by(self.snapshot_stride as usize));
        }
        if self.checkpoint_stride > 0 {
            steps.extend((0..=total).step_by(self.checkpoint_stride as usize));
        }
        if self.log_snapshots_per_octave > 0 {
            let m = self.log_snapshots_per_octave as f64;
            let mut k = 0.0;
            loop {
                let t = (k / m).exp2();
                let s = (t / self.dt).round() as u64;
                if s > total {
                    break;
                }
                steps.push(s);
                k += 1.0;
            }
        }
        steps.sort_unstable();
        steps.dedup();
        steps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_gamma_values() {
        assert_eq!(default_gamma(2), 1.5);
        assert!((default_gamma(3) - 19.0 / 12.0).abs() < 1e-15);
        for d in [2, 3] {
            let (lo, hi) = gamma_range(d);
            assert!(lo < default_gamma(d) && default_gamma(d) < hi);
        }
    }

    #[test]
    fn validation() {
        let mut c = SimConfig::new(3, 16, 10.0, 0.1, 0.01, 1.0);
        assert!(c.validate().is_ok());
        c.gamma = 1.7;
        assert!(c.validate().is_err());
        let mut c = SimConfig::new(2, 16, 10.0, 0.0, 0.01, 1.0);
        assert!(c.validate().is_err());
        c.eps = 0.1;
        c.family = DataFamily::centered_gaussian(0.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn snapshot_schedule() {
        let mut c = SimConfig::new(2, 16, 10.0, 0.1, 0.25, 4.0);
        assert_eq!(c.snapshot_steps(), vec![0, 16]);
        c.snapshot_stride = 6;
        assert_eq!(c.snapshot_steps(), vec![0, 6, 12, 16]);
        c.snapshot_stride = 0;
        c.log_snapshots_per_octave = 1;
        assert_eq!(c.snapshot_steps(), vec![0, 4, 8, 16]);
        c.t_end = 0.0;
        assert_eq!(c.snapshot_steps(), vec![0]);
    }
}
