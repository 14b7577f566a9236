use num_complex::Complex64;

use super::profile::{require_late_time, PhasePotential, ProfileSnapshot};
use crate::{par, ComplexField, Result, SbpError};

/// Running `Theta(t) = int_{t0}^t s^{-1} V[f_hat](s) ds`, trapezoidal in
/// `log s`. Snapshots must arrive in increasing time.
#[derive(Clone, Debug)]
pub struct PhaseAccumulator {
    potential: PhasePotential,
    start: Option<f64>,
    last_t: f64,
    theta: Vec<f64>,
    last_integrand: Vec<f64>,
}

impl PhaseAccumulator {
    pub fn new(potential: PhasePotential) -> Self {
        Self {
            potential,
            start: None,
            last_t: f64::NAN,
            theta: Vec::new(),
            last_integrand: Vec::new(),
        }
    }

    pub fn potential(&self) -> &PhasePotential {
        &self.potential
    }

    /// Time the integral starts from; `None` before the first snapshot.
    pub fn start(&self) -> Option<f64> {
        self.start
    }

    pub fn time(&self) -> Option<f64> {
        self.start.map(|_| self.last_t)
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn last_integrand(&self) -> &[f64] {
        &self.last_integrand
    }

    pub fn push(&mut self, p: &ProfileSnapshot) -> Result<()> {
        require_late_time(p.t)?;
        let v = self.potential.evaluate(&p.f_hat)?;
        match self.start {
            None => {
                self.start = Some(p.t);
                self.theta = vec![0.0; v.len()];
            }
            Some(_) => {
                if !(p.t > self.last_t) {
                    return Err(SbpError::NonMonotoneTime {
                        previous: self.last_t,
                        next: p.t,
                    });
                }
                let h = 0.5 * (p.t.ln() - self.last_t.ln());
                let prev = &self.last_integrand;
                par::update(&mut self.theta, |i, th| *th += h * (prev[i] + v[i]));
            }
        }
        self.last_t = p.t;
        self.last_integrand = v;
        Ok(())
    }

    pub fn restore(&mut self, start: f64, last_t: f64, theta: Vec<f64>, last_integrand: Vec<f64>) {
        self.start = Some(start);
        self.last_t = last_t;
        self.theta = theta;
        self.last_integrand = last_integrand;
    }

    /// `B = e^{i Theta / 2}`.
    pub fn factor(&self) -> Vec<Complex64> {
        integrating_factor(&self.theta)
    }
}

pub fn integrating_factor(theta: &[f64]) -> Vec<Complex64> {
    par::collect(theta.len(), |i| Complex64::from_polar(1.0, 0.5 * theta[i]))
}

/// `g = e^{i Theta / 2} f_hat`.
pub fn corrected_profile(theta: &[f64], f_hat: &ComplexField) -> Result<ComplexField> {
    if theta.len() != f_hat.values().len() {
        return Err(SbpError::SizeMismatch {
            expected: f_hat.values().len(),
            found: theta.len(),
        });
    }
    let mut g = f_hat.clone();
    par::update(g.values_mut(), |i, v| *v *= Complex64::from_polar(1.0, 0.5 * theta[i]));
    Ok(g)
}
