//! Flat `key = value` configuration with a typed schema.
//!
//! Values are layered: built-in defaults, then the preset, then a config
//! file, then command-line flags. Every value remembers where it came from
//! so errors can point at a file line or a flag.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use sbp_core::dynamics::{default_gamma, gamma_range, Couplings, DataFamily, Guards, SimConfig};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    Default,
    Preset(String),
    File { path: PathBuf, line: usize },
    Flag(String),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Default => write!(f, "default"),
            Origin::Preset(name) => write!(f, "preset `{name}`"),
            Origin::File { path, line } => write!(f, "{}:{line}", path.display()),
            Origin::Flag(flag) => write!(f, "flag {flag}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub origin: Origin,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(key) => write!(f, "{}: key `{key}`: {}", self.origin, self.message),
            None => write!(f, "{}: {}", self.origin, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub origin: Origin,
}

impl Entry {
    pub fn new(key: &str, value: impl Into<String>, origin: Origin) -> Self {
        Self {
            key: key.to_string(),
            value: value.into(),
            origin,
        }
    }

    fn error(&self, message: impl Into<String>) -> ConfigError {
        ConfigError {
            origin: self.origin.clone(),
            key: Some(self.key.clone()),
            message: message.into(),
        }
    }
}

pub struct KeySpec {
    pub name: &'static str,
    pub kind: &'static str,
    pub unit: &'static str,
    pub help: &'static str,
}

const fn key(name: &'static str, kind: &'static str, unit: &'static str, help: &'static str) -> KeySpec {
    KeySpec { name, kind, unit, help }
}

/// Every accepted key, in the order used when writing a config back out.
pub const SCHEMA: &[KeySpec] = &[
    key("dim", "integer", "-", "spatial dimension, 2 or 3"),
    key("n", "integer", "points", "grid points per axis"),
    key("box", "real|auto", "length", "side of the periodic box; auto applies the preflight rule"),
    key("eps", "real", "-", "H^{gamma,gamma} norm of the initial data"),
    key("gamma", "real", "-", "regularity index; defaults to 1/2 + (d^2+4)/4d"),
    key("dt", "real", "time", "Strang step"),
    key("t_end", "real", "time", "final time"),
    key("seed", "integer", "-", "seed for random data and probes"),
    key("family", "gaussian|random|snapshot", "-", "initial data family"),
    key("width", "real", "length", "gaussian width w in exp(-|x|^2/2w^2)"),
    key("center", "real list", "length", "gaussian center, comma separated"),
    key("modulation", "real list", "1/length", "gaussian wave vector"),
    key("bumps", "integer", "-", "number of bumps for the random family"),
    key("snapshot_path", "path", "-", "field file for the snapshot family"),
    key("snapshot_stride", "integer", "steps", "emit a snapshot every this many steps (0: ends only)"),
    key("log_per_octave", "integer", "-", "extra log-spaced snapshots per octave for t >= 1"),
    key("checkpoint_stride", "integer", "steps", "checkpoint every this many steps (0: never)"),
    key("hartree", "real", "-", "coupling of (K*|u|^2) u"),
    key("local", "real", "-", "coupling of |u|^{2/d} u"),
    key("pad", "integer", "-", "zero-padding factor for convolutions"),
    key("box_safety", "real", "-", "required L / (x0 + v t_end); 0 disables the box preflight"),
    key("radius_quantile", "real", "fraction", "mass fraction defining the preflight radii"),
    key("boundary_tolerance", "real", "fraction", "abort when the edge band holds more mass"),
    key("tail_tolerance", "real", "fraction", "allowed spectral energy in the top octave"),
    key("diagnostics", "bool", "-", "stream snapshots through the asymptotic diagnostics"),
    key("rhs_terms", "bool", "-", "evaluate the profile-equation terms at every snapshot"),
    key("probe_time", "real", "time", "time at which the operator identities are checked"),
    key("samples", "integer", "-", "random fields per identity check"),
    key("oracle_n", "integer", "points", "grid points per axis for the direct-sum oracle"),
    key("oracle_box", "real", "length", "box side for the direct-sum oracle"),
    key("lemma_boxes", "real list", "length", "increasing box sides for the kernel norm study"),
    key("lemma_spacing", "real", "length", "quadrature spacing for the kernel norm study"),
    key("dyadic_times", "real list", "time", "times T at which dyadic differences are checked"),
    key("residual_center", "real", "time", "center of the residual stencils"),
    key("residual_spacings", "real list", "time", "stencil spacings, coarse to fine"),
];

pub fn spec(name: &str) -> Option<&'static KeySpec> {
    SCHEMA.iter().find(|k| k.name == name)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoxSize {
    Fixed(f64),
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Gaussian,
    Random,
    Snapshot,
}

impl Family {
    fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Random => "random",
            Family::Snapshot => "snapshot",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub dim: usize,
    pub n: usize,
    pub box_size: BoxSize,
    pub eps: f64,
    gamma: Option<f64>,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    pub family: Family,
    pub width: f64,
    pub center: Vec<f64>,
    pub modulation: Vec<f64>,
    pub bumps: usize,
    pub snapshot_path: Option<PathBuf>,
    pub snapshot_stride: u64,
    pub log_per_octave: u32,
    pub checkpoint_stride: u64,
    pub couplings: Couplings,
    pub pad: usize,
    pub guards: Guards,
    pub diagnostics: bool,
    pub rhs_terms: bool,
    pub probe_time: f64,
    pub samples: usize,
    pub oracle_n: usize,
    pub oracle_box: f64,
    pub lemma_boxes: Vec<f64>,
    pub lemma_spacing: f64,
    pub dyadic_times: Vec<f64>,
    pub residual_center: f64,
    pub residual_spacings: Vec<f64>,
    origins: BTreeMap<&'static str, Origin>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            dim: 2,
            n: 128,
            box_size: BoxSize::Auto,
            eps: 0.1,
            gamma: None,
            dt: 0.01,
            t_end: 1.0,
            seed: 0,
            family: Family::Gaussian,
            width: 1.0,
            center: Vec::new(),
            modulation: Vec::new(),
            bumps: 4,
            snapshot_path: None,
            snapshot_stride: 0,
            log_per_octave: 0,
            checkpoint_stride: 0,
            couplings: Couplings::FULL,
            pad: 2,
            guards: Guards::default(),
            diagnostics: false,
            rhs_terms: false,
            probe_time: 2.0,
            samples: 4,
            oracle_n: 16,
            oracle_box: 6.0,
            lemma_boxes: vec![32.0, 64.0],
            lemma_spacing: 0.125,
            dyadic_times: vec![2.0, 4.0, 8.0, 16.0],
            residual_center: 2.0,
            residual_spacings: vec![0.2, 0.1],
            origins: BTreeMap::new(),
        }
    }
}

fn real(e: &Entry) -> Result<f64, ConfigError> {
    let v: f64 = e
        .value
        .parse()
        .map_err(|_| e.error(format!("expected a real number, got `{}`", e.value)))?;
    if !v.is_finite() {
        return Err(e.error(format!("value `{}` is not finite", e.value)));
    }
    Ok(v)
}

fn positive(e: &Entry) -> Result<f64, ConfigError> {
    let v = real(e)?;
    if v <= 0.0 {
        return Err(e.error(format!("must be positive, got {v}")));
    }
    Ok(v)
}

fn nonnegative(e: &Entry) -> Result<f64, ConfigError> {
    let v = real(e)?;
    if v < 0.0 {
        return Err(e.error(format!("must be >= 0, got {v}")));
    }
    Ok(v)
}

fn fraction(e: &Entry) -> Result<f64, ConfigError> {
    let v = real(e)?;
    if !(v > 0.0 && v <= 1.0) {
        return Err(e.error(format!("must lie in (0, 1], got {v}")));
    }
    Ok(v)
}

fn integer<T: std::str::FromStr>(e: &Entry) -> Result<T, ConfigError> {
    e.value
        .parse()
        .map_err(|_| e.error(format!("expected a non-negative integer, got `{}`", e.value)))
}

fn list(e: &Entry) -> Result<Vec<f64>, ConfigError> {
    if e.value.is_empty() {
        return Ok(Vec::new());
    }
    e.value
        .split(',')
        .map(|s| {
            let s = s.trim();
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(e.error(format!("`{s}` in `{}` is not a finite real number", e.value))),
            }
        })
        .collect()
}

fn positive_list(e: &Entry) -> Result<Vec<f64>, ConfigError> {
    let v = list(e)?;
    if v.is_empty() || v.iter().any(|&x| x <= 0.0) {
        return Err(e.error("needs one or more positive values"));
    }
    Ok(v)
}

fn boolean(e: &Entry) -> Result<bool, ConfigError> {
    match e.value.to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(e.error(format!("expected on/off, got `{}`", e.value))),
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn fmt_bool(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

impl Settings {
    /// Applies the layers in order and validates the result.
    pub fn resolve(layers: &[&[Entry]]) -> Result<Self, ConfigError> {
        let mut s = Settings::default();
        for layer in layers {
            for e in layer.iter() {
                s.apply(e)?;
            }
        }
        s.check()?;
        Ok(s)
    }

    pub fn origin(&self, key: &str) -> Origin {
        self.origins.get(key).cloned().unwrap_or(Origin::Default)
    }

    fn apply(&mut self, e: &Entry) -> Result<(), ConfigError> {
        let Some(spec) = spec(&e.key) else {
            return Err(ConfigError {
                origin: e.origin.clone(),
                key: Some(e.key.clone()),
                message: "unknown key; run `sbp keys` for the list".into(),
            });
        };
        match spec.name {
            "dim" => {
                self.dim = integer(e)?;
                if self.dim != 2 && self.dim != 3 {
                    return Err(e.error(format!("must be 2 or 3, got {}", self.dim)));
                }
            }
            "n" => {
                self.n = integer(e)?;
                if self.n < 4 || self.n % 2 != 0 {
                    return Err(e.error(format!("must be even and at least 4, got {}", self.n)));
                }
            }
            "box" => {
                self.box_size = if e.value.eq_ignore_ascii_case("auto") {
                    BoxSize::Auto
                } else {
                    BoxSize::Fixed(positive(e)?)
                }
            }
            "eps" => self.eps = positive(e)?,
            "gamma" => self.gamma = Some(real(e)?),
            "dt" => self.dt = positive(e)?,
            "t_end" => self.t_end = nonnegative(e)?,
            "seed" => self.seed = integer(e)?,
            "family" => {
                self.family = match e.value.as_str() {
                    "gaussian" => Family::Gaussian,
                    "random" => Family::Random,
                    "snapshot" => Family::Snapshot,
                    other => return Err(e.error(format!("expected gaussian, random or snapshot, got `{other}`"))),
                }
            }
            "width" => self.width = positive(e)?,
            "center" => self.center = list(e)?,
            "modulation" => self.modulation = list(e)?,
            "bumps" => {
                self.bumps = integer(e)?;
                if self.bumps == 0 {
                    return Err(e.error("needs at least one bump"));
                }
            }
            "snapshot_path" => self.snapshot_path = Some(PathBuf::from(&e.value)),
            "snapshot_stride" => self.snapshot_stride = integer(e)?,
            "log_per_octave" => self.log_per_octave = integer(e)?,
            "checkpoint_stride" => self.checkpoint_stride = integer(e)?,
            "hartree" => self.couplings.hartree = real(e)?,
            "local" => self.couplings.local = real(e)?,
            "pad" => {
                self.pad = integer(e)?;
                if self.pad == 0 {
                    return Err(e.error("must be at least 1"));
                }
            }
            "box_safety" => self.guards.box_safety = nonnegative(e)?,
            "radius_quantile" => self.guards.radius_quantile = fraction(e)?,
            "boundary_tolerance" => self.guards.boundary_tolerance = fraction(e)?,
            "tail_tolerance" => self.guards.tail_tolerance = fraction(e)?,
            "diagnostics" => self.diagnostics = boolean(e)?,
            "rhs_terms" => self.rhs_terms = boolean(e)?,
            "probe_time" => self.probe_time = positive(e)?,
            "samples" => self.samples = integer(e)?,
            "oracle_n" => self.oracle_n = integer(e)?,
            "oracle_box" => self.oracle_box = positive(e)?,
            "lemma_boxes" => {
                let v = positive_list(e)?;
                if v.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(e.error("box sides must increase"));
                }
                self.lemma_boxes = v;
            }
            "lemma_spacing" => self.lemma_spacing = positive(e)?,
            "dyadic_times" => self.dyadic_times = positive_list(e)?,
            "residual_center" => self.residual_center = positive(e)?,
            "residual_spacings" => self.residual_spacings = positive_list(e)?,
            _ => unreachable!("schema key without a setter"),
        }
        self.origins.insert(spec.name, e.origin.clone());
        Ok(())
    }

    fn fail(&self, key: &'static str, message: String) -> ConfigError {
        ConfigError {
            origin: self.origin(key),
            key: Some(key.to_string()),
            message,
        }
    }

    /// Cross-key checks that need the final values.
    fn check(&self) -> Result<(), ConfigError> {
        let gamma = self.gamma();
        let (lo, hi) = gamma_range(self.dim);
        if !(gamma > lo && gamma < hi) {
            return Err(self.fail(
                "gamma",
                format!("gamma = {gamma} outside the open interval ({lo}, {hi}) required for dim = {}", self.dim),
            ));
        }
        if self.center.len() > self.dim {
            return Err(self.fail("center", format!("{} components for dim = {}", self.center.len(), self.dim)));
        }
        if self.modulation.len() > self.dim {
            return Err(self.fail(
                "modulation",
                format!("{} components for dim = {}", self.modulation.len(), self.dim),
            ));
        }
        if self.family == Family::Snapshot && self.snapshot_path.is_none() {
            return Err(ConfigError {
                origin: self.origin("family"),
                key: Some("snapshot_path".into()),
                message: "missing required key (family = snapshot)".into(),
            });
        }
        if self.t_end > 0.0 && self.dt > self.t_end {
            return Err(self.fail("dt", format!("dt = {} exceeds t_end = {}", self.dt, self.t_end)));
        }
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or_else(|| default_gamma(self.dim))
    }

    pub fn fixed_box(&self) -> Option<f64> {
        match self.box_size {
            BoxSize::Fixed(l) => Some(l),
            BoxSize::Auto => None,
        }
    }

    /// Requires an explicit box; `auto` is resolved by the run layer.
    pub fn require_box(&self) -> Result<f64, ConfigError> {
        self.fixed_box()
            .ok_or_else(|| self.fail("box", "this study needs an explicit box length".into()))
    }

    /// The simulation config; an `auto` box is left as `0` for the caller
    /// to size.
    pub fn sim_config(&self) -> SimConfig {
        let mut c = SimConfig::new(
            self.dim,
            self.n,
            self.fixed_box().unwrap_or(0.0),
            self.eps,
            self.dt,
            self.t_end,
        );
        c.gamma = self.gamma();
        c.family = match self.family {
            Family::Gaussian => DataFamily::Gaussian {
                width: self.width,
                center: self.center.clone(),
                modulation: self.modulation.clone(),
            },
            Family::Random => DataFamily::RandomBumps { count: self.bumps },
            Family::Snapshot => DataFamily::Snapshot {
                path: self.snapshot_path.clone().unwrap_or_default(),
            },
        };
        c.snapshot_stride = self.snapshot_stride;
        c.log_snapshots_per_octave = self.log_per_octave;
        c.checkpoint_stride = self.checkpoint_stride;
        c.seed = self.seed;
        c.couplings = self.couplings;
        c.pad_factor = self.pad;
        c.guards = self.guards;
        c
    }

    /// Value of a key as it would be written in a config file.
    pub fn value_of(&self, key: &str) -> String {
        match key {
            "dim" => self.dim.to_string(),
            "n" => self.n.to_string(),
            "box" => match self.box_size {
                BoxSize::Fixed(l) => l.to_string(),
                BoxSize::Auto => "auto".into(),
            },
            "eps" => self.eps.to_string(),
            "gamma" => self.gamma().to_string(),
            "dt" => self.dt.to_string(),
            "t_end" => self.t_end.to_string(),
            "seed" => self.seed.to_string(),
            "family" => self.family.name().into(),
            "width" => self.width.to_string(),
            "center" => fmt_list(&self.center),
            "modulation" => fmt_list(&self.modulation),
            "bumps" => self.bumps.to_string(),
            "snapshot_path" => self
                .snapshot_path
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            "snapshot_stride" => self.snapshot_stride.to_string(),
            "log_per_octave" => self.log_per_octave.to_string(),
            "checkpoint_stride" => self.checkpoint_stride.to_string(),
            "hartree" => self.couplings.hartree.to_string(),
            "local" => self.couplings.local.to_string(),
            "pad" => self.pad.to_string(),
            "box_safety" => self.guards.box_safety.to_string(),
            "radius_quantile" => self.guards.radius_quantile.to_string(),
            "boundary_tolerance" => self.guards.boundary_tolerance.to_string(),
            "tail_tolerance" => self.guards.tail_tolerance.to_string(),
            "diagnostics" => fmt_bool(self.diagnostics).into(),
            "rhs_terms" => fmt_bool(self.rhs_terms).into(),
            "probe_time" => self.probe_time.to_string(),
            "samples" => self.samples.to_string(),
            "oracle_n" => self.oracle_n.to_string(),
            "oracle_box" => self.oracle_box.to_string(),
            "lemma_boxes" => fmt_list(&self.lemma_boxes),
            "lemma_spacing" => self.lemma_spacing.to_string(),
            "dyadic_times" => fmt_list(&self.dyadic_times),
            "residual_center" => self.residual_center.to_string(),
            "residual_spacings" => fmt_list(&self.residual_spacings),
            _ => String::new(),
        }
    }

    /// All keys with their resolved values, in schema order.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        SCHEMA
            .iter()
            .filter(|k| !(k.name == "snapshot_path" && self.snapshot_path.is_none()))
            .map(|k| (k.name.to_string(), self.value_of(k.name)))
            .collect()
    }

    /// Round-trippable config text.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for k in SCHEMA {
            if k.name == "snapshot_path" && self.snapshot_path.is_none() {
                continue;
            }
            out.push_str(&format!("{} = {}\n", k.name, self.value_of(k.name)));
        }
        out
    }
}

/// Parses config text. Blank lines and `#` comments are skipped; a key may
/// appear once per file.
pub fn parse_text(text: &str, path: &Path) -> Result<Vec<Entry>, ConfigError> {
    let mut out: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let origin = Origin::File {
            path: path.to_path_buf(),
            line: i + 1,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError {
                origin,
                key: None,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(ConfigError {
                origin,
                key: None,
                message: "missing key before `=`".into(),
            });
        }
        if let Some(first) = out.iter().find(|e| e.key == k) {
            let first_line = match &first.origin {
                Origin::File { line, .. } => *line,
                _ => 0,
            };
            return Err(ConfigError {
                origin,
                key: Some(k.to_string()),
                message: format!("duplicate key (first set on line {first_line})"),
            });
        }
        out.push(Entry::new(k, v, origin));
    }
    Ok(out)
}

pub fn parse_file(path: &Path) -> Result<Vec<Entry>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        origin: Origin::File {
            path: path.to_path_buf(),
            line: 0,
        },
        key: None,
        message: format!("cannot read config: {e}"),
    })?;
    parse_text(&text, path)
}
