use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Result, SbpError};

/// Ordinary least squares `y = slope x + intercept`; returns
/// `(slope, intercept, slope standard error)`.
pub(crate) fn least_squares(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if pts.len() > 2 {
        let sse: f64 = pts.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, stderr)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Slope of `log ||u||_inf` against `log t`.
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// 95% confidence interval for the slope.
    pub band: (f64, f64),
    pub points: usize,
    pub t_min: f64,
    pub t_max: f64,
}

impl DecayFit {
    pub fn slope_within(&self, lo: f64, hi: f64) -> bool {
        self.slope >= lo && self.slope <= hi
    }
}

/// Log-log fit of `(t, ||u(t)||_inf)`. Needs at least 8 points, `t >= 1`, and a
/// full decade of `t`.
pub fn decay_fit(series: &[(f64, f64)]) -> Result<DecayFit> {
    if series.len() < 8 {
        return Err(SbpError::InsufficientData(format!("{} points, need 8", series.len())));
    }
    let mut pts = Vec::with_capacity(series.len());
    for &(t, y) in series {
        if !(t >= 1.0 && t.is_finite()) {
            return Err(SbpError::InvalidParameter(format!("time {t} outside [1, inf)")));
        }
        if !(y > 0.0 && y.is_finite()) {
            return Err(SbpError::InvalidParameter(format!("value {y} at t = {t} is not positive")));
        }
        pts.push((t.ln(), y.ln()));
    }
    let t_min = series.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let t_max = series.iter().map(|p| p.0).fold(0.0, f64::max);
    if t_max < 10.0 * t_min {
        return Err(SbpError::InsufficientData(format!(
            "times span [{t_min}, {t_max}], less than a decade"
        )));
    }
    let (slope, intercept, se) = least_squares(&pts);
    let dof = (pts.len() - 2) as f64;
    let q = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| SbpError::InvalidParameter(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(DecayFit {
        slope,
        intercept,
        slope_stderr: se,
        band: (slope - q * se, slope + q * se),
        points: pts.len(),
        t_min,
        t_max,
    })
}
