mod config;
mod experiments;
mod output;
mod presets;
mod verdict;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::{parse_file, ConfigError, Entry, Origin, Settings, SCHEMA};
use experiments::{classify, Ctx};
use output::{output_root, Artifacts, RunLock};
use presets::{Command, ExperimentPreset, Variant, PRESETS};
use verdict::{evaluate, Metric, Metrics, Status, Verdict, VariantVerdict};

#[derive(Parser)]
#[command(name = "sbp", version, about = "Schrödinger-Bopp-Podolsky solver and asymptotic diagnostics")]
#[command(after_help = "Outputs go to --out, or to $SBP_OUTPUT_ROOT/<preset> (default root: ./sbp-out).\n\
Exit status: 0 pass, 1 threshold failed, 2 usage or configuration error, 3 numerical abort.")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Time-step the equation and write records, diagnostics and the final field
    Run {
        #[command(flatten)]
        flags: Flags,
        /// Resume from this checkpoint file
        #[arg(long, value_name = "FILE")]
        resume: Option<PathBuf>,
    },
    /// Operator identity suite, or the free-flow check with --preset free-flow
    VerifyOps(Flags),
    /// Convolution oracle, multiplier cross-validation and kernel box norms
    KernelCheck(Flags),
    /// Run and fit the log-log decay of the sup norm
    Decay(Flags),
    /// Run with diagnostics, extract the scattering profile and compare corrected and raw profiles
    Scattering(Flags),
    /// Profile-equation residual under stencil refinement
    Residual(Flags),
    /// Re-evaluate the asymptotic profile of a stored scattering run
    Compare {
        /// Output directory of a `scattering` run
        #[arg(long, value_name = "DIR")]
        from: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Run every preset and aggregate one verdict
    Acceptance {
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// List the presets with their thresholds
    Presets,
    /// List the config keys
    Keys,
}

/// Flags shared by the experiment subcommands; each mirrors a config key.
#[derive(Args, Clone, Default)]
struct Flags {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "box", value_name = "L|auto")]
    box_length: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    width: Option<f64>,
    /// Preset name (see `sbp presets`)
    #[arg(long)]
    preset: Option<String>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Config file of `key = value` lines
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Any other config key
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Flags {
    fn entries(&self) -> Result<Vec<Entry>, ConfigError> {
        let mut out = Vec::new();
        let mut push = |key: &str, flag: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push(Entry::new(key, v, Origin::Flag(flag.into())));
            }
        };
        push("dim", "--dim", self.dim.map(|v| v.to_string()));
        push("n", "--n", self.n.map(|v| v.to_string()));
        push("box", "--box", self.box_length.clone());
        push("eps", "--eps", self.eps.map(|v| v.to_string()));
        push("gamma", "--gamma", self.gamma.map(|v| v.to_string()));
        push("dt", "--dt", self.dt.map(|v| v.to_string()));
        push("t_end", "--t-end", self.t_end.map(|v| v.to_string()));
        push("seed", "--seed", self.seed.map(|v| v.to_string()));
        push("width", "--width", self.width.map(|v| v.to_string()));
        for s in &self.set {
            let Some((k, v)) = s.split_once('=') else {
                return Err(ConfigError {
                    origin: Origin::Flag("--set".into()),
                    key: None,
                    message: format!("expected KEY=VALUE, got `{s}`"),
                });
            };
            out.push(Entry::new(k.trim(), v.trim(), Origin::Flag(format!("--set {}", k.trim()))));
        }
        Ok(out)
    }
}

fn format_metric(m: Option<Metric>) -> String {
    match m {
        Some(Metric::Number(x)) => format!("{x:.6e}"),
        Some(Metric::Flag(b)) => b.to_string(),
        None => "not measured".into(),
    }
}

fn select_variants(preset: &'static ExperimentPreset, dim: Option<usize>) -> Vec<&'static Variant> {
    let all: Vec<&Variant> = preset.variants.iter().collect();
    match dim {
        Some(d) if all.len() > 1 && all.iter().any(|v| v.dim() == Some(d)) => {
            all.into_iter().filter(|v| v.dim() == Some(d)).collect()
        }
        _ => all,
    }
}

fn finish_variant(
    label: &str,
    settings: &Settings,
    metrics: Metrics,
    thresholds: &[presets::Threshold],
    result: Result<()>,
) -> VariantVerdict {
    let checks: Vec<_> = thresholds.iter().map(|t| evaluate(t, &metrics)).collect();
    let (status, error) = match result {
        Ok(()) if checks.iter().all(|c| c.pass) => (Status::Pass, None),
        Ok(()) => (Status::Fail, None),
        Err(e) => (classify(&e), Some(format!("{e:#}"))),
    };
    for c in &checks {
        println!(
            "  {label}: {} = {} ({}) {}",
            c.metric,
            format_metric(c.value),
            c.rule,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    if let Some(e) = &error {
        eprintln!("  {label}: error: {e}");
    }
    VariantVerdict {
        label: label.to_string(),
        status,
        config: settings.to_map(),
        metrics,
        checks,
        error,
    }
}

fn write_verdict(artifacts: &mut Artifacts, verdict: &mut Verdict) -> Result<()> {
    artifacts.path("verdict.json")?;
    let mut names = artifacts.names().to_vec();
    names.sort();
    verdict.artifacts = names;
    artifacts.json("verdict.json", verdict)
}

fn run_preset(command: Command, flags: &Flags, resume: Option<PathBuf>) -> Result<Status> {
    let preset = match &flags.preset {
        Some(name) => {
            let p = presets::find(name).ok_or_else(|| ConfigError {
                origin: Origin::Flag("--preset".into()),
                key: None,
                message: format!("unknown preset `{name}`; see `sbp presets`"),
            })?;
            if p.command != command {
                return Err(ConfigError {
                    origin: Origin::Flag("--preset".into()),
                    key: None,
                    message: format!("preset `{name}` runs under `sbp {}`", p.command.name()),
                }
                .into());
            }
            Some(p)
        }
        None => presets::default_for(command),
    };
    let file = match &flags.config {
        Some(p) => parse_file(p)?,
        None => Vec::new(),
    };
    let flag_entries = flags.entries()?;

    // resolve everything before touching the output directory
    let mut jobs: Vec<(&str, &[presets::Threshold], Settings)> = Vec::new();
    match preset {
        Some(p) => {
            for v in select_variants(p, flags.dim) {
                let pe = p.entries(v);
                jobs.push((v.label, v.thresholds, Settings::resolve(&[&pe, &file, &flag_entries])?));
            }
        }
        None => jobs.push(("run", &[], Settings::resolve(&[&file, &flag_entries])?)),
    }

    let dir = flags
        .out
        .clone()
        .unwrap_or_else(|| output_root().join(preset.map_or(command.name(), |p| p.name)));
    let _lock = RunLock::acquire(&dir)?;
    let mut artifacts = Artifacts::new(&dir);
    let mut verdict = Verdict::new(command.name(), preset.map(|p| p.name), preset.map(|p| p.criterion));
    let multi = jobs.len() > 1;
    for (label, thresholds, settings) in jobs {
        let started = Instant::now();
        let mut out = if multi { artifacts.child(label) } else { Artifacts::new(&dir) };
        let mut metrics = Metrics::default();
        let mut ctx = Ctx {
            settings,
            preset,
            out: &mut out,
            metrics: &mut metrics,
            resume: resume.clone(),
        };
        let result = experiments::execute(preset.map(|p| p.study), &mut ctx);
        let settings = ctx.settings;
        artifacts.absorb(out);
        eprintln!("{} [{label}] finished in {:.1} s", command.name(), started.elapsed().as_secs_f64());
        verdict.push(finish_variant(label, &settings, metrics, thresholds, result));
    }
    write_verdict(&mut artifacts, &mut verdict)?;
    let criterion = verdict.criterion.map(|c| format!(" (criterion {c})")).unwrap_or_default();
    println!(
        "{} {}{} -> {}",
        verdict.status.label(),
        preset.map_or(command.name(), |p| p.name),
        criterion,
        dir.join("verdict.json").display()
    );
    Ok(verdict.status)
}

fn run_compare(from: PathBuf, out: Option<PathBuf>) -> Result<Status> {
    let dir = out.unwrap_or_else(|| output_root().join("compare"));
    let _lock = RunLock::acquire(&dir)?;
    let mut artifacts = Artifacts::new(&dir);
    let mut metrics = Metrics::default();
    let result = experiments::compare(&from, &mut artifacts, &mut metrics);
    let threshold = presets::find("scattering")
        .and_then(|p| p.threshold("asymptotic_decreasing"))
        .ok_or_else(|| anyhow!("scattering preset lacks the asymptotic threshold"))?;
    let (settings, result) = match result {
        Ok(s) => (s, Ok(())),
        Err(e) => (Settings::default(), Err(e)),
    };
    let mut verdict = Verdict::new("compare", None, None);
    verdict.push(finish_variant("compare", &settings, metrics, &[threshold], result));
    write_verdict(&mut artifacts, &mut verdict)?;
    println!("{} compare -> {}", verdict.status.label(), dir.join("verdict.json").display());
    Ok(verdict.status)
}

#[derive(Serialize)]
struct CriterionStatus {
    criterion: u8,
    preset: &'static str,
    status: Status,
}

#[derive(Serialize)]
struct AcceptanceSummary {
    schema: &'static str,
    version: u32,
    status: Status,
    criteria: Vec<CriterionStatus>,
}

fn run_acceptance(out: Option<PathBuf>) -> Result<Status> {
    let root = out.unwrap_or_else(|| output_root().join("acceptance"));
    let mut criteria = Vec::new();
    for p in PRESETS {
        let flags = Flags {
            preset: Some(p.name.into()),
            out: Some(root.join(p.name)),
            ..Flags::default()
        };
        let status = match run_preset(p.command, &flags, None) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("{}: {e:#}", p.name);
                Status::Rejected
            }
        };
        criteria.push(CriterionStatus {
            criterion: p.criterion,
            preset: p.name,
            status,
        });
    }
    criteria.sort_by_key(|c| c.criterion);
    let status = criteria.iter().map(|c| c.status).max().unwrap_or(Status::Pass);
    for c in &criteria {
        println!("criterion {} [{}]: {}", c.criterion, c.preset, c.status.label());
    }
    println!("acceptance: {}", status.label());
    let summary = AcceptanceSummary {
        schema: "sbp-acceptance",
        version: verdict::SCHEMA_VERSION,
        status,
        criteria,
    };
    let mut artifacts = Artifacts::new(&root);
    artifacts.json("summary.json", &summary)?;
    Ok(status)
}

fn list_presets() {
    for p in PRESETS {
        println!("{} (criterion {}, `sbp {}`): {}", p.name, p.criterion, p.command.name(), p.summary);
        for v in p.variants {
            let overrides: Vec<String> = v.overrides.iter().map(|(k, v)| format!("{k}={v}")).collect();
            println!("  [{}] {}", v.label, overrides.join(" "));
            for t in v.thresholds {
                println!("    {} {}", t.metric, t.rule.describe());
            }
        }
    }
}

fn list_keys() {
    for k in SCHEMA {
        println!("{:<20} {:<26} {:<9} {}", k.name, k.kind, k.unit, k.help);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Run { flags, resume } => run_preset(Command::Run, &flags, resume),
        Cmd::VerifyOps(f) => run_preset(Command::VerifyOps, &f, None),
        Cmd::KernelCheck(f) => run_preset(Command::KernelCheck, &f, None),
        Cmd::Decay(f) => run_preset(Command::Decay, &f, None),
        Cmd::Scattering(f) => run_preset(Command::Scattering, &f, None),
        Cmd::Residual(f) => run_preset(Command::Residual, &f, None),
        Cmd::Compare { from, out } => run_compare(from, out),
        Cmd::Acceptance { out } => run_acceptance(out),
        Cmd::Presets => {
            list_presets();
            Ok(Status::Pass)
        }
        Cmd::Keys => {
            list_keys();
            Ok(Status::Pass)
        }
    };
    match result {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e).exit_code() as u8)
        }
    }
}
