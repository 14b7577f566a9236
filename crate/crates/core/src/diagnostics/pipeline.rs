use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::phase::{corrected_profile, PhaseAccumulator};
use super::profile::{bootstrap_from_parts, profile, PhasePotential};
use super::residual::RhsContext;
use super::scattering::ProfileSample;
use crate::dynamics::{top_octave_fraction, Couplings, SimConfig, SinkState, Snapshot, SnapshotSink};
use crate::{ComplexField, GridSpec, Result, SbpError, Space};

/// One row per diagnostic time `t >= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub d_norm: f64,
    pub e_norm: f64,
    /// Running supremum of `D + E`.
    pub x_norm: f64,
    pub sobolev: f64,
    pub j_power: f64,
    pub linf_u: f64,
    pub bridge_ratio: f64,
    pub i1: Option<f64>,
    pub i2: Option<f64>,
    pub i3: Option<f64>,
    pub i4: Option<f64>,
    /// `||g(t) - g(t_prev)||_inf`
    pub g_step: Option<f64>,
    /// `||f_hat(t) - f_hat(t_prev)||_inf`
    pub f_step: Option<f64>,
    /// Spectral mass fraction of `f_hat` in the outer half of the frequency box.
    pub frequency_tail: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsConfig {
    pub eps: f64,
    pub gamma: f64,
    pub couplings: Couplings,
    pub pad_factor: usize,
    /// Evaluate `I1..I4` at every snapshot (costly).
    pub rhs_terms: bool,
    /// Times at which full samples are kept.
    pub capture: Vec<f64>,
}

impl DiagnosticsConfig {
    pub fn for_run(config: &SimConfig) -> Self {
        Self {
            eps: config.eps,
            gamma: config.gamma,
            couplings: config.couplings,
            pad_factor: config.pad_factor,
            rhs_terms: false,
            capture: dyadic_times(config.t_end),
        }
    }
}

/// `1, 2, 4, ...` up to `t_end`.
pub fn dyadic_times(t_end: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut t = 1.0;
    while t <= t_end {
        out.push(t);
        t *= 2.0;
    }
    out
}

/// Diagnostics consumer for [`crate::dynamics::run`].
pub struct DiagnosticsPipeline {
    grid: GridSpec,
    config: DiagnosticsConfig,
    phase: PhaseAccumulator,
    records: Vec<DiagnosticsRecord>,
    x_sup: f64,
    prev: Option<(ComplexField, ComplexField)>,
    samples: Vec<ProfileSample>,
    last: Option<ProfileSample>,
}

#[derive(Serialize, Deserialize)]
struct SavedHeader {
    records: Vec<DiagnosticsRecord>,
    x_sup: f64,
    phase_start: Option<f64>,
    phase_time: Option<f64>,
    has_prev: bool,
    sample_times: Vec<f64>,
    last_time: Option<f64>,
}

pub struct DiagnosticsOutput {
    pub records: Vec<DiagnosticsRecord>,
    /// Captured samples, time ordered, with the final time appended if it
    /// was not captured.
    pub samples: Vec<ProfileSample>,
    pub potential: PhasePotential,
}

fn real_as_field(grid: GridSpec, v: &[f64]) -> Result<ComplexField> {
    ComplexField::from_vec(grid, Space::Frequency, v.iter().map(|&x| Complex64::new(x, 0.0)).collect())
}

fn field_as_real(f: &ComplexField) -> Vec<f64> {
    f.values().iter().map(|z| z.re).collect()
}

impl DiagnosticsPipeline {
    pub fn new(grid: GridSpec, config: DiagnosticsConfig) -> Result<Self> {
        let potential = PhasePotential::new(grid, config.couplings, config.pad_factor)?;
        Ok(Self {
            grid,
            config,
            phase: PhaseAccumulator::new(potential),
            records: Vec::new(),
            x_sup: 0.0,
            prev: None,
            samples: Vec::new(),
            last: None,
        })
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    pub fn samples(&self) -> &[ProfileSample] {
        &self.samples
    }

    pub fn finish(self) -> DiagnosticsOutput {
        let mut samples = self.samples;
        if let Some(last) = self.last {
            if samples.last().map(|s| s.t) != Some(last.t) {
                samples.push(last);
            }
        }
        DiagnosticsOutput {
            records: self.records,
            samples,
            potential: self.phase.potential().clone(),
        }
    }
}

impl SnapshotSink for DiagnosticsPipeline {
    fn observe(&mut self, s: &Snapshot) -> Result<()> {
        if s.t < 1.0 {
            return Ok(());
        }
        let p = profile(&s.u_hat, s.t)?;
        let norms = bootstrap_from_parts(&s.u, &s.u_hat, &p, self.config.eps, self.config.gamma)?;
        self.phase.push(&p)?;
        let g = corrected_profile(self.phase.theta(), &p.f_hat)?;
        self.x_sup = self.x_sup.max(norms.d_norm + norms.e_norm);

        let (mut i1, mut i2, mut i3, mut i4) = (None, None, None, None);
        if self.config.rhs_terms {
            let n = RhsContext::new(self.grid, self.config.couplings, s.t, self.config.pad_factor)?
                .terms(&p)?
                .norms()?;
            (i1, i2, i3, i4) = (Some(n.i1), Some(n.i2), Some(n.i3), Some(n.i4));
        }
        let (g_step, f_step) = match &self.prev {
            Some((pg, pf)) => (Some(g.sub(pg)?.linf_norm()), Some(p.f_hat.sub(pf)?.linf_norm())),
            None => (None, None),
        };
        self.records.push(DiagnosticsRecord {
            t: s.t,
            d_norm: norms.d_norm,
            e_norm: norms.e_norm,
            x_norm: self.x_sup,
            sobolev: norms.sobolev,
            j_power: norms.j_power,
            linf_u: norms.linf_u,
            bridge_ratio: norms.bridge_ratio,
            i1,
            i2,
            i3,
            i4,
            g_step,
            f_step,
            frequency_tail: top_octave_fraction(&p.f_hat),
        });

        let sample = ProfileSample {
            t: s.t,
            f_hat: p.f_hat.clone(),
            theta: self.phase.theta().to_vec(),
            u: s.u.clone(),
        };
        if self.config.capture.iter().any(|&c| (c - s.t).abs() <= 1e-9 * c) {
            self.samples.push(sample.clone());
        }
        self.last = Some(sample);
        self.prev = Some((g, p.f_hat));
        Ok(())
    }

    fn save_state(&self) -> Result<SinkState> {
        let g = self.grid;
        let mut fields = Vec::new();
        if self.phase.start().is_some() {
            fields.push(real_as_field(g, self.phase.theta())?);
            fields.push(real_as_field(g, self.phase.last_integrand())?);
        }
        if let Some((pg, pf)) = &self.prev {
            fields.push(pg.clone());
            fields.push(pf.clone());
        }
        for s in self.samples.iter().chain(self.last.iter()) {
            fields.push(s.f_hat.clone());
            fields.push(real_as_field(g, &s.theta)?);
            fields.push(s.u.clone());
        }
        let header = SavedHeader {
            records: self.records.clone(),
            x_sup: self.x_sup,
            phase_start: self.phase.start(),
            phase_time: self.phase.time(),
            has_prev: self.prev.is_some(),
            sample_times: self.samples.iter().map(|s| s.t).collect(),
            last_time: self.last.as_ref().map(|s| s.t),
        };
        Ok(SinkState {
            json: serde_json::to_value(header)?,
            fields,
        })
    }

    fn restore_state(&mut self, state: SinkState) -> Result<()> {
        if state.json.is_null() {
            return Ok(());
        }
        let h: SavedHeader = serde_json::from_value(state.json)?;
        let mut it = state.fields.into_iter();
        let mut next = || it.next().ok_or_else(|| SbpError::Format("diagnostics state truncated".into()));
        if let (Some(start), Some(time)) = (h.phase_start, h.phase_time) {
            let theta = field_as_real(&next()?);
            let integrand = field_as_real(&next()?);
            self.phase.restore(start, time, theta, integrand);
        }
        self.prev = if h.has_prev { Some((next()?, next()?)) } else { None };
        let mut take = |t: f64| -> Result<ProfileSample> {
            let f_hat = next()?;
            let theta = field_as_real(&next()?);
            let u = next()?;
            Ok(ProfileSample { t, f_hat, theta, u })
        };
        self.samples = h.sample_times.iter().map(|&t| take(t)).collect::<Result<_>>()?;
        self.last = match h.last_time {
            Some(t) => Some(take(t)?),
            None => None,
        };
        self.records = h.records;
        self.x_sup = h.x_sup;
        Ok(())
    }
}
