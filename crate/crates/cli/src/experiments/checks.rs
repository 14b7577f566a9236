use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbp_core::kernel::{band_deviation, direct_convolution, lemma1_report, Kernel, KernelMultiplier, MultiplierMode};
use sbp_core::verify::{run_identity_suite, VerifyConfig};
use sbp_core::GridSpec;

use super::Ctx;

pub(super) fn identities(ctx: &mut Ctx<'_>) -> Result<()> {
    let s = &ctx.settings;
    let cfg = VerifyConfig {
        dim: s.dim,
        n: s.n,
        box_length: s.require_box()?,
        t: s.probe_time,
        gamma: s.gamma(),
        seed: s.seed,
        samples: s.samples,
        gaussian_center: s.center.clone(),
    };
    ctx.write_config()?;
    let report = run_identity_suite(&cfg)?;
    let mut w = ctx.out.csv("identities.csv")?;
    w.write_record(["identity", "deviation"])?;
    if let serde_json::Value::Object(map) = serde_json::to_value(&report)? {
        for (name, v) in map {
            if let Some(x) = v.as_f64() {
                ctx.metrics.num(name.clone(), x);
                w.serialize((name, x))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub(super) fn kernel(ctx: &mut Ctx<'_>) -> Result<()> {
    let s = ctx.settings.clone();
    let box_length = s.require_box()?;
    ctx.write_config()?;

    // padded FFT convolution against the direct sum
    let og = GridSpec::new(s.dim, s.oracle_n, s.oracle_box)?;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let rho: Vec<f64> = (0..og.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
    let m = KernelMultiplier::new(og, Kernel::Base, MultiplierMode::Sampled, s.pad)?;
    let (fast, residue) = m.convolve_values(&rho)?;
    let slow = direct_convolution(&og, Kernel::Base, &rho)?;
    let scale = slow.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let err = fast.iter().zip(&slow).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    ctx.metrics.num("direct_sum_rel", err / scale);
    ctx.metrics.num("direct_sum_imag_residue", residue);

    // sampled against closed-form multiplier on |xi| in [0.5, xi_max / 2]
    let grid = GridSpec::new(s.dim, s.n, box_length)?;
    let sampled = KernelMultiplier::new(grid, Kernel::Base, MultiplierMode::Sampled, s.pad)?;
    let analytic = KernelMultiplier::new(grid, Kernel::Base, MultiplierMode::Analytic, s.pad)?;
    let hi = 0.5 * grid.nyquist();
    let band = band_deviation(&sampled, &analytic, 0.5, hi)?;
    ctx.metrics.num("band_max_relative", band.max_relative);
    ctx.metrics.num("band_worst_xi", band.at_xi);
    ctx.metrics.num("band_points", band.points as f64);
    ctx.metrics.num("band_upper_edge", hi);
    for (name, table) in [("multiplier_sampled.csv", &sampled), ("multiplier_analytic.csv", &analytic)] {
        let p = ctx.out.path(name)?;
        table.write_csv(std::io::BufWriter::new(std::fs::File::create(p)?))?;
    }

    // box norms: p = d is critical (log growth), p = d + 1/2 converges
    let d = s.dim as f64;
    let sup = lemma1_report(s.dim, d + 0.5, &s.lemma_boxes, s.lemma_spacing)?;
    let crit = lemma1_report(s.dim, d, &s.lemma_boxes, s.lemma_spacing)?;
    ctx.metrics.num("lemma_supercritical_p", sup.p);
    ctx.metrics.num("lemma_supercritical_change", sup.last_relative_change());
    ctx.metrics.num("lemma_critical_p", crit.p);
    ctx.metrics.flag("lemma_critical_increasing", crit.norms_increasing());
    ctx.metrics.num("lemma_critical_trend_deviation", crit.log_trend_deviation());
    let mut w = ctx.out.csv("lemma1.csv")?;
    w.write_record(["p", "box_length", "norm", "relative_change", "log_slope", "critical_log_slope"])?;
    for r in [&sup, &crit] {
        for row in &r.rows {
            w.serialize((r.p, row.box_length, row.norm, row.relative_change, row.log_slope, r.critical_log_slope))?;
        }
    }
    w.flush()?;
    Ok(())
}
