use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sbp_core::diagnostics::{DiagnosticsConfig, DiagnosticsPipeline};
use sbp_core::dynamics::{
    prepare_initial_data, required_box_length, run, DataFamily, Nonlinearity, RunOptions, RunOutput, SimConfig,
    SinkState, Snapshot, SnapshotSink,
};
use sbp_core::snapshot::{self, Precision};
use sbp_core::verify::random_smooth_field;
use sbp_core::{ComplexField, SbpError};

use super::Ctx;
use crate::config::{BoxSize, ConfigError, Settings};
use crate::output::Artifacts;
use crate::verdict::Metrics;

/// Smallest integer box length passing the preflight rule. The radii barely
/// move with `L` once the data is resolved, so a few fixed-point sweeps
/// settle it.
fn auto_box(cfg: &SimConfig) -> Result<f64> {
    if cfg.guards.box_safety <= 0.0 {
        bail!(SbpError::InvalidParameter("box = auto needs box_safety > 0".into()));
    }
    let mut l = match &cfg.family {
        DataFamily::Gaussian { width, center, .. } => {
            let c = center.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            (10.0 * width + 4.0 * c).ceil()
        }
        DataFamily::RandomBumps { .. } => 32.0,
        DataFamily::Snapshot { .. } => {
            bail!(SbpError::InvalidParameter("box = auto is unavailable for snapshot data".into()))
        }
    };
    for _ in 0..16 {
        let mut c = cfg.clone();
        c.box_length = l;
        let u0 = prepare_initial_data(&c)?;
        let next = required_box_length(&c, &u0)?.ceil();
        if next <= l && l - next < 1.0 {
            return Ok(l);
        }
        l = next;
    }
    bail!(SbpError::BoxTooSmall(format!("automatic box sizing did not settle (last L = {l})")))
}

/// Simulation config with an `auto` box replaced by the sized one.
pub(super) fn resolve_box(settings: &mut Settings) -> Result<SimConfig> {
    let mut cfg = settings.sim_config();
    if settings.box_size == BoxSize::Auto {
        cfg.box_length = auto_box(&cfg)?;
        settings.box_size = BoxSize::Fixed(cfg.box_length);
    }
    cfg.validate()?;
    Ok(cfg)
}

pub(super) enum Sink {
    Plain,
    Diagnostics(Box<DiagnosticsPipeline>),
}

impl SnapshotSink for Sink {
    fn observe(&mut self, s: &Snapshot) -> sbp_core::Result<()> {
        match self {
            Sink::Plain => Ok(()),
            Sink::Diagnostics(p) => p.observe(s),
        }
    }

    fn save_state(&self) -> sbp_core::Result<SinkState> {
        match self {
            Sink::Plain => Ok(SinkState::default()),
            Sink::Diagnostics(p) => p.save_state(),
        }
    }

    fn restore_state(&mut self, state: SinkState) -> sbp_core::Result<()> {
        match self {
            Sink::Plain => Ok(()),
            Sink::Diagnostics(p) => p.restore_state(state),
        }
    }
}

pub(super) fn diagnostics_sink(settings: &Settings, cfg: &SimConfig) -> Result<Sink> {
    let dc = DiagnosticsConfig {
        rhs_terms: settings.rhs_terms,
        ..DiagnosticsConfig::for_run(cfg)
    };
    Ok(Sink::Diagnostics(Box::new(DiagnosticsPipeline::new(cfg.grid()?, dc)?)))
}

fn run_metrics<S>(m: &mut Metrics, out: &RunOutput<S>, cfg: &SimConfig) {
    m.num("box_length", cfg.box_length);
    m.num("steps", out.steps as f64);
    m.num("final_time", out.final_time);
    m.num("initial_mass", out.baseline.mass);
    m.num("initial_energy", out.baseline.energy);
    m.num("mass_drift", out.max_mass_drift());
    m.num("energy_drift", out.max_energy_drift());
    if let Some(p) = &out.preflight {
        m.num("preflight_required_box", p.required_box);
        m.num("preflight_top_octave", p.top_octave);
    }
}

/// Runs one trajectory and writes its records, diagnostics and final field.
fn trajectory(settings: &mut Settings, out: &mut Artifacts, m: &mut Metrics, resume: Option<&Path>) -> Result<()> {
    let cfg = resolve_box(settings)?;
    out.text("config.txt", &settings.to_text())?;
    let sink = if settings.diagnostics && cfg.t_end >= 1.0 {
        diagnostics_sink(settings, &cfg)?
    } else {
        Sink::Plain
    };
    let mut opts = RunOptions {
        resume: resume.map(|p| p.to_path_buf()),
        ..RunOptions::default()
    };
    if cfg.checkpoint_stride > 0 {
        opts.checkpoint_dir = Some(out.dir("checkpoints")?);
    }
    let result = run(&cfg, sink, opts)?;
    run_metrics(m, &result, &cfg);
    m.num("final_linf", result.final_field.linf_norm());
    out.csv_rows("records.csv", &result.records)?;
    for cp in &result.checkpoints {
        if let Some(name) = cp.file_name() {
            out.path(&format!("checkpoints/{}", name.to_string_lossy()))?;
        }
    }
    let p = out.path("final.sbpf")?;
    snapshot::save(&p, &result.final_field, result.final_time, Precision::Complex64)?;
    if let Sink::Diagnostics(pipe) = result.sink {
        out.csv_rows("diagnostics.csv", pipe.records())?;
        if let Some(last) = pipe.records().last() {
            m.num("x_norm", last.x_norm);
            m.num("bridge_ratio", last.bridge_ratio);
        }
    }
    Ok(())
}

pub(super) fn plain(ctx: &mut Ctx<'_>) -> Result<()> {
    let resume = ctx.resume.clone();
    trajectory(&mut ctx.settings, ctx.out, ctx.metrics, resume.as_deref())
}

pub(super) fn conservation(ctx: &mut Ctx<'_>) -> Result<()> {
    let cfg = resolve_box(&mut ctx.settings)?;
    ctx.write_config()?;
    if cfg.snapshot_stride % 2 != 0 {
        return Err(ConfigError {
            origin: ctx.settings.origin("snapshot_stride"),
            key: Some("snapshot_stride".into()),
            message: "must be even so the doubled step samples the same times".into(),
        }
        .into());
    }
    let grid = cfg.grid()?;

    // coefficient check of the energy on a random field of unit size
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let u = random_smooth_field(&grid, &mut rng, 3).scale(Complex64::new(0.4, 0.0));
    let v = random_smooth_field(&grid, &mut rng, 2);
    let nl = Nonlinearity::new(grid, cfg.couplings, cfg.pad_factor)?;
    let defect = nl.variational_defect(&u, &v, 1e-4)?;
    ctx.metrics.num("variational_defect", defect);
    if let Some(t) = ctx.preset.and_then(|p| p.threshold("variational_defect")) {
        let check = crate::verdict::evaluate(&t, ctx.metrics);
        if !check.pass {
            ctx.metrics.flag("energy_study_skipped", true);
            return Ok(());
        }
    }

    let fine = run(&cfg, (), RunOptions::default())?;
    run_metrics(ctx.metrics, &fine, &cfg);
    ctx.out.csv_rows("records.csv", &fine.records)?;

    let mut coarse_cfg = cfg.clone();
    coarse_cfg.dt = 2.0 * cfg.dt;
    coarse_cfg.snapshot_stride = cfg.snapshot_stride / 2;
    let coarse = run(&coarse_cfg, (), RunOptions::default())?;
    ctx.out.csv_rows("records_coarse.csv", &coarse.records)?;
    let (ef, ec) = (fine.max_energy_drift(), coarse.max_energy_drift());
    ctx.metrics.num("energy_drift_coarse", ec);
    ctx.metrics.num("energy_drift_ratio", ec / ef);
    ctx.metrics.num("energy_drift_order", (ec / ef).log2());
    Ok(())
}

fn list_files(dir: &Path, rel: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let name = rel.join(entry.file_name());
        if entry.file_type()?.is_dir() {
            list_files(&entry.path(), &name, out)?;
        } else {
            out.push(name);
        }
    }
    Ok(())
}

/// Runs the configured trajectory twice and compares every output byte.
pub(super) fn determinism(ctx: &mut Ctx<'_>) -> Result<()> {
    let mut trees = Vec::new();
    for sub in ["first", "second"] {
        let mut child = ctx.out.child(sub);
        let mut scratch = Metrics::default();
        let mut s = ctx.settings.clone();
        trajectory(&mut s, &mut child, &mut scratch, None)?;
        if sub == "first" {
            ctx.settings = s;
            *ctx.metrics = scratch;
        }
        ctx.out.absorb(child);
        let dir = ctx.out.dir(sub)?;
        let mut files = Vec::new();
        list_files(&dir, Path::new(""), &mut files)?;
        files.sort();
        trees.push((dir, files));
    }
    let ((da, fa), (db, fb)) = (&trees[0], &trees[1]);
    let mut identical = fa == fb;
    let mut bytes = 0usize;
    for name in fa.iter().filter(|n| fb.contains(n)) {
        let x = fs::read(da.join(name))?;
        let y = fs::read(db.join(name))?;
        bytes += x.len();
        if x != y {
            identical = false;
            ctx.metrics.flag(format!("differs:{}", name.display()), true);
        }
    }
    ctx.metrics.num("files_compared", fa.len() as f64);
    ctx.metrics.num("bytes_compared", bytes as f64);
    ctx.metrics.flag("outputs_identical", identical);
    Ok(())
}

/// The free flow of `exp(-a|x|^2)` is `(1 + 4iat)^{-d/2} exp(-a|x|^2 / (1 + 4iat))`.
fn spreading_gaussian(u0: &ComplexField, width: f64, t: f64) -> ComplexField {
    let grid = *u0.grid();
    let a = 1.0 / (2.0 * width * width);
    let g0 = ComplexField::from_fn(grid, |x| {
        let r2: f64 = x.iter().take(grid.dim()).map(|c| c * c).sum();
        Complex64::new((-a * r2).exp(), 0.0)
    });
    // amplitude of the prepared data relative to the unit gaussian
    let (num, den) = u0
        .values()
        .iter()
        .zip(g0.values())
        .fold((Complex64::default(), 0.0), |(n, d), (u, g)| (n + u * g.re, d + g.re * g.re));
    let c = num / den;
    let q = Complex64::new(1.0, 4.0 * a * t);
    let pre = c * q.powf(-(grid.dim() as f64) / 2.0);
    ComplexField::from_fn(grid, |x| {
        let r2: f64 = x.iter().take(grid.dim()).map(|c| c * c).sum();
        pre * (-a * r2 / q).exp()
    })
}

pub(super) fn free_flow(ctx: &mut Ctx<'_>) -> Result<()> {
    let cfg = resolve_box(&mut ctx.settings)?;
    ctx.write_config()?;
    if !cfg.couplings.is_linear() {
        let key = if cfg.couplings.hartree != 0.0 { "hartree" } else { "local" };
        return Err(ConfigError {
            origin: ctx.settings.origin(key),
            key: Some(key.into()),
            message: "the free-flow study needs hartree = 0 and local = 0".into(),
        }
        .into());
    }
    let width = match &cfg.family {
        DataFamily::Gaussian { width, center, modulation }
            if center.iter().chain(modulation).all(|&c| c == 0.0) =>
        {
            *width
        }
        _ => {
            return Err(ConfigError {
                origin: ctx.settings.origin("family"),
                key: Some("family".into()),
                message: "the free-flow study needs a centered, unmodulated gaussian".into(),
            }
            .into())
        }
    };
    let u0 = prepare_initial_data(&cfg)?;
    let result = run(&cfg, (), RunOptions::default())?;
    run_metrics(ctx.metrics, &result, &cfg);
    let exact = spreading_gaussian(&u0, width, result.final_time);
    let rel = result.final_field.rel_l2_distance(&exact)?;
    ctx.metrics.num("free_flow_rel_l2", rel);

    // profile along the first axis through the origin
    let grid = *exact.grid();
    let mid = grid.n() / 2;
    let mut w = ctx.out.csv("free_flow.csv")?;
    w.write_record(["x", "re_numeric", "im_numeric", "re_exact", "im_exact"])?;
    for j in 0..grid.n() {
        let idx = grid.flatten([j, mid, if grid.dim() == 3 { mid } else { 0 }]);
        let (a, b) = (result.final_field.values()[idx], exact.values()[idx]);
        w.serialize((grid.coord(j), a.re, a.im, b.re, b.im))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auto_box_meets_the_preflight_rule() {
        let mut s = Settings::default();
        s.width = 1.5;
        s.t_end = 3.0;
        let cfg = resolve_box(&mut s).unwrap();
        let l = cfg.box_length;
        assert_eq!(l, l.round());
        let u0 = prepare_initial_data(&cfg).unwrap();
        let req = required_box_length(&cfg, &u0).unwrap();
        assert!(req <= l && l - req < 1.0, "{req} vs {l}");
        assert_eq!(s.box_size, BoxSize::Fixed(l));
    }

    #[test]
    fn spreading_gaussian_at_time_zero_is_the_data() {
        let g = sbp_core::GridSpec::new(2, 32, 20.0).unwrap();
        let u0 = ComplexField::from_fn(g, |x| Complex64::new(0.3 * (-(x[0] * x[0] + x[1] * x[1]) / 8.0).exp(), 0.0));
        let e = spreading_gaussian(&u0, 2.0, 0.0);
        assert!(e.rel_l2_distance(&u0).unwrap() < 1e-14);
        // mass is conserved by the exact flow
        let later = spreading_gaussian(&u0, 2.0, 0.7);
        assert!((later.l2_norm() - u0.l2_norm()).abs() < 1e-10);
    }
}
