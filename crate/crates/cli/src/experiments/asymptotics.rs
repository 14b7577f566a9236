use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use num_complex::Complex64;
use sbp_core::diagnostics::{
    asymptotic_field, asymptotic_table, decay_fit, dyadic_differences, extract_w, profile, profile_ode_residual,
    AsymptoticRow, ProfileSnapshot,
};
use sbp_core::dynamics::{run, RunOptions, Snapshot, SnapshotSink};
use sbp_core::snapshot::{self, Precision};
use sbp_core::{ComplexField, GridSpec, SbpError, Space};

use super::trajectory::{diagnostics_sink, resolve_box, Sink};
use super::{strictly_decreasing, time_tag, Ctx};
use crate::config::{parse_file, ConfigError, Settings};
use crate::output::Artifacts;
use crate::verdict::Metrics;

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

pub(super) fn decay(ctx: &mut Ctx<'_>) -> Result<()> {
    let cfg = resolve_box(&mut ctx.settings)?;
    ctx.write_config()?;
    let out = run(&cfg, (), RunOptions::default())?;
    ctx.metrics.num("box_length", cfg.box_length);
    ctx.metrics.num("mass_drift", out.max_mass_drift());
    ctx.out.csv_rows("records.csv", &out.records)?;

    let series: Vec<(f64, f64)> = out.records.iter().filter(|r| r.t >= 1.0).map(|r| (r.t, r.linf)).collect();
    let fit = decay_fit(&series)?;
    ctx.metrics.num("slope", fit.slope);
    ctx.metrics.num("slope_stderr", fit.slope_stderr);
    ctx.metrics.num("slope_band_lo", fit.band.0);
    ctx.metrics.num("slope_band_hi", fit.band.1);
    ctx.metrics.num("fit_points", fit.points as f64);
    ctx.metrics.num("fit_t_min", fit.t_min);
    ctx.metrics.num("fit_t_max", fit.t_max);
    let mut w = ctx.out.csv("decay.csv")?;
    w.write_record(["t", "linf", "fitted"])?;
    for (t, v) in &series {
        w.serialize((t, v, fit.intercept.exp() * t.powf(fit.slope)))?;
    }
    w.flush()?;
    Ok(())
}

/// Records `asymptotic_<T>` for the checked times and whether they strictly
/// decrease.
fn asymptotic_checks(rows: &[AsymptoticRow], times: &[f64], m: &mut Metrics) -> Result<()> {
    let mut picked = Vec::new();
    for &t in times {
        let row = rows
            .iter()
            .find(|r| near(r.t, t))
            .ok_or_else(|| SbpError::InsufficientData(format!("no stored field at t = {t}")))?;
        m.num(format!("asymptotic_{}", time_tag(t)), row.scaled_distance);
        picked.push(row.scaled_distance);
    }
    m.flag("asymptotic_decreasing", strictly_decreasing(&picked));
    Ok(())
}

fn real_field(grid: GridSpec, v: &[f64]) -> Result<ComplexField> {
    Ok(ComplexField::from_vec(
        grid,
        Space::Frequency,
        v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
    )?)
}

pub(super) fn scattering(ctx: &mut Ctx<'_>) -> Result<()> {
    let cfg = resolve_box(&mut ctx.settings)?;
    ctx.write_config()?;
    let sink = diagnostics_sink(&ctx.settings, &cfg)?;
    let out = run(&cfg, sink, RunOptions::default())?;
    ctx.metrics.num("box_length", cfg.box_length);
    ctx.metrics.num("mass_drift", out.max_mass_drift());
    ctx.out.csv_rows("records.csv", &out.records)?;
    let Sink::Diagnostics(pipe) = out.sink else {
        unreachable!("scattering always runs the diagnostics");
    };
    ctx.out.csv_rows("diagnostics.csv", pipe.records())?;
    let diag = pipe.finish();
    let grid = cfg.grid()?;

    for s in &diag.samples {
        let p = ctx.out.path(&format!("samples/u_t{}.sbpf", time_tag(s.t)))?;
        snapshot::save(&p, &s.u, s.t, Precision::Complex128)?;
    }

    let rows = dyadic_differences(&diag.samples)?;
    ctx.out.csv_rows("dyadic.csv", &rows)?;
    let mut g = Vec::new();
    let mut below = true;
    for &t in &ctx.settings.dyadic_times {
        let row = rows
            .iter()
            .find(|r| near(r.t, t))
            .ok_or_else(|| SbpError::InsufficientData(format!("no dyadic pair ({t}, {})", 2.0 * t)))?;
        let tag = time_tag(t);
        ctx.metrics.num(format!("g_diff_{tag}"), row.g_diff);
        ctx.metrics.num(format!("f_diff_{tag}"), row.f_diff);
        ctx.metrics.flag(format!("g_below_f_{tag}"), row.g_diff < row.f_diff);
        below &= row.g_diff < row.f_diff;
        g.push(row.g_diff);
    }
    ctx.metrics.flag("g_diff_decreasing", strictly_decreasing(&g));
    ctx.metrics.flag("g_below_f", below);

    let report = extract_w(&diag.samples, &diag.potential)?;
    let p = ctx.out.path("w.sbpf")?;
    snapshot::save(&p, &report.w, report.t_end, Precision::Complex128)?;
    let p = ctx.out.path("potential.sbpf")?;
    snapshot::save(&p, &real_field(grid, &report.potential)?, report.t_end, Precision::Complex128)?;
    ctx.out.csv_rows("convergence.csv", &report.convergence)?;
    if let Some(e) = report.fitted_exponent {
        ctx.metrics.num("g_convergence_exponent", e);
    }
    let table = asymptotic_table(&diag.samples, &report)?;
    ctx.out.csv_rows("asymptotic.csv", &table)?;
    asymptotic_checks(&table, &ctx.settings.dyadic_times, ctx.metrics)
}

/// Re-evaluates the asymptotic profile of a stored scattering run.
pub fn compare(from: &Path, out: &mut Artifacts, m: &mut Metrics) -> Result<Settings> {
    let entries = parse_file(&from.join("config.txt"))?;
    let settings = Settings::resolve(&[&entries])?;
    let grid = GridSpec::new(settings.dim, settings.n, settings.require_box()?)?;
    let (w, _) = snapshot::load(&from.join("w.sbpf"))?;
    let (v, _) = snapshot::load(&from.join("potential.sbpf"))?;
    let v: Vec<f64> = v.values().iter().map(|z| z.re).collect();
    if !w.grid().same_as(&grid) {
        return Err(SbpError::GridMismatch("w.sbpf does not match config.txt".into()).into());
    }

    let dir = from.join("samples");
    let mut fields = Vec::new();
    for entry in fs::read_dir(&dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "sbpf") {
            fields.push(snapshot::load(&path)?);
        }
    }
    fields.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut rows = Vec::new();
    for (u, t) in fields.iter().filter(|(_, t)| *t >= 1.0) {
        let approx = asymptotic_field(&w, &v, *t, u.grid())?;
        let scale = t.powf(grid.dim() as f64 / 2.0);
        rows.push(AsymptoticRow {
            t: *t,
            scaled_distance: scale * u.sub(&approx)?.linf_norm(),
            scaled_approx: scale * approx.linf_norm(),
        });
    }
    out.csv_rows("compare.csv", &rows)?;
    asymptotic_checks(&rows, &settings.dyadic_times, m)?;
    Ok(settings)
}

/// Keeps profiles at the stencil times.
struct Stencil {
    wanted: Vec<f64>,
    got: Vec<ProfileSnapshot>,
}

impl SnapshotSink for Stencil {
    fn observe(&mut self, s: &Snapshot) -> sbp_core::Result<()> {
        if self.wanted.iter().any(|&w| near(s.t, w)) {
            self.got.push(profile(&s.u_hat, s.t)?);
        }
        Ok(())
    }
}

pub(super) fn residual(ctx: &mut Ctx<'_>) -> Result<()> {
    let cfg = resolve_box(&mut ctx.settings)?;
    ctx.write_config()?;
    let center = ctx.settings.residual_center;
    let mut spacings = ctx.settings.residual_spacings.clone();
    spacings.sort_by(|a, b| b.total_cmp(a));
    if spacings.len() < 2 {
        return Err(ConfigError {
            origin: ctx.settings.origin("residual_spacings"),
            key: Some("residual_spacings".into()),
            message: "needs at least two spacings".into(),
        }
        .into());
    }
    let mut wanted = vec![center];
    for &h in &spacings {
        wanted.extend([center - h, center + h]);
    }
    let sink = Stencil { wanted, got: Vec::new() };
    let out = run(&cfg, sink, RunOptions::default())?;
    ctx.metrics.num("mass_drift", out.max_mass_drift());
    let got = out.sink.got;
    let find = |t: f64| -> Result<ProfileSnapshot> {
        got.iter().find(|p| near(p.t, t)).cloned().ok_or_else(|| {
            ConfigError {
                origin: ctx.settings.origin("snapshot_stride"),
                key: Some("snapshot_stride".into()),
                message: format!("no snapshot emitted at t = {t}; stencil times must be snapshot times"),
            }
            .into()
        })
    };

    let mut reports = Vec::new();
    for &h in &spacings {
        let snaps = [find(center - h)?, find(center)?, find(center + h)?];
        reports.push(profile_ode_residual(&snaps, cfg.couplings, cfg.pad_factor)?);
    }
    let mut w = ctx.out.csv("residual.csv")?;
    w.write_record(["spacing", "residual", "retained", "relative", "i1", "i2", "i3", "i4"])?;
    for (h, r) in spacings.iter().zip(&reports) {
        let tag = time_tag(*h);
        ctx.metrics.num(format!("residual_{tag}"), r.residual);
        ctx.metrics.num(format!("relative_{tag}"), r.relative);
        w.serialize((h, r.residual, r.retained, r.relative, r.terms.i1, r.terms.i2, r.terms.i3, r.terms.i4))?;
    }
    w.flush()?;
    let k = reports.len();
    ctx.metrics.num("residual_ratio", reports[k - 2].residual / reports[k - 1].residual);
    ctx.metrics.num("residual_relative", reports[k - 1].relative);
    Ok(())
}
