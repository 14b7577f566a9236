//! Experiment presets: one per acceptance criterion, each carrying its
//! config overrides and pass thresholds.

use crate::config::{Entry, Origin};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Run,
    VerifyOps,
    KernelCheck,
    Decay,
    Scattering,
    Residual,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::VerifyOps => "verify-ops",
            Command::KernelCheck => "kernel-check",
            Command::Decay => "decay",
            Command::Scattering => "scattering",
            Command::Residual => "residual",
        }
    }
}

/// What a preset measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Study {
    Identities,
    FreeFlow,
    Conservation,
    Determinism,
    Kernel,
    Decay,
    Scattering,
    Residual,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rule {
    AtMost(f64),
    Below(f64),
    Within(f64, f64),
    Holds,
}

impl Rule {
    pub fn describe(self) -> String {
        match self {
            Rule::AtMost(x) => format!("<= {x:e}"),
            Rule::Below(x) => format!("< {x:e}"),
            Rule::Within(lo, hi) => format!("in [{lo}, {hi}]"),
            Rule::Holds => "holds".into(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Threshold {
    pub metric: &'static str,
    pub rule: Rule,
}

const fn th(metric: &'static str, rule: Rule) -> Threshold {
    Threshold { metric, rule }
}

#[derive(Debug)]
pub struct Variant {
    pub label: &'static str,
    pub overrides: &'static [(&'static str, &'static str)],
    pub thresholds: &'static [Threshold],
}

impl Variant {
    pub fn dim(&self) -> Option<usize> {
        self.overrides
            .iter()
            .find(|(k, _)| *k == "dim")
            .and_then(|(_, v)| v.parse().ok())
    }
}

#[derive(Debug)]
pub struct ExperimentPreset {
    pub name: &'static str,
    pub criterion: u8,
    pub command: Command,
    pub study: Study,
    pub summary: &'static str,
    pub variants: &'static [Variant],
}

impl ExperimentPreset {
    pub fn entries(&self, variant: &Variant) -> Vec<Entry> {
        variant
            .overrides
            .iter()
            .map(|(k, v)| Entry::new(k, *v, Origin::Preset(self.name.to_string())))
            .collect()
    }

    pub fn threshold(&self, metric: &str) -> Option<Threshold> {
        self.variants
            .iter()
            .flat_map(|v| v.thresholds.iter())
            .find(|t| t.metric == metric)
            .copied()
    }
}

/// The 2D run shared by the decay and scattering presets.
const DECAY_2D: &[(&str, &str)] = &[
    ("dim", "2"),
    ("n", "512"),
    ("box", "auto"),
    ("family", "gaussian"),
    ("width", "2"),
    ("dt", "0.05"),
    ("t_end", "50"),
    ("log_per_octave", "16"),
];

pub const PRESETS: &[ExperimentPreset] = &[
    ExperimentPreset {
        name: "identities",
        criterion: 1,
        command: Command::VerifyOps,
        study: Study::Identities,
        summary: "operator identity suite at t = 2 on 256^2, L = 64",
        variants: &[Variant {
            label: "2d",
            overrides: &[
                ("dim", "2"),
                ("n", "256"),
                ("box", "64"),
                ("probe_time", "2"),
                ("seed", "7"),
                ("samples", "4"),
                ("center", "8,6"),
            ],
            thresholds: &[
                th("j_routes", Rule::AtMost(1e-10)),
                th("j_power_routes", Rule::AtMost(1e-5)),
                th("factorization", Rule::AtMost(1e-6)),
            ],
        }],
    },
    ExperimentPreset {
        name: "free-flow",
        criterion: 2,
        command: Command::VerifyOps,
        study: Study::FreeFlow,
        summary: "stepper with the potential disabled against the spreading gaussian at t = 1",
        variants: &[Variant {
            label: "2d",
            overrides: &[
                ("dim", "2"),
                ("n", "128"),
                ("box", "40"),
                ("family", "gaussian"),
                ("width", "1.4142135623730951"),
                ("hartree", "0"),
                ("local", "0"),
                ("dt", "0.01"),
                ("t_end", "1"),
            ],
            thresholds: &[th("free_flow_rel_l2", Rule::AtMost(1e-8))],
        }],
    },
    ExperimentPreset {
        name: "conservation",
        criterion: 3,
        command: Command::Run,
        study: Study::Conservation,
        summary: "mass drift over 1e4 steps and energy drift under dt halving",
        variants: &[Variant {
            label: "2d",
            overrides: &[
                ("dim", "2"),
                ("n", "128"),
                ("box", "auto"),
                ("eps", "0.3"),
                ("family", "gaussian"),
                ("width", "2"),
                ("dt", "0.001"),
                ("t_end", "10"),
                ("snapshot_stride", "100"),
                ("seed", "3"),
            ],
            thresholds: &[
                th("variational_defect", Rule::AtMost(1e-5)),
                th("mass_drift", Rule::AtMost(1e-10)),
                th("energy_drift_ratio", Rule::Within(3.5, 4.5)),
            ],
        }],
    },
    ExperimentPreset {
        name: "kernel",
        criterion: 4,
        command: Command::KernelCheck,
        study: Study::Kernel,
        summary: "convolution oracle, sampled vs analytic multiplier, kernel box norms",
        variants: &[Variant {
            label: "2d",
            overrides: &[
                ("dim", "2"),
                ("n", "256"),
                ("box", "64"),
                ("seed", "11"),
                ("oracle_n", "16"),
                ("oracle_box", "6"),
                ("lemma_boxes", "32,64"),
                ("lemma_spacing", "0.125"),
            ],
            thresholds: &[
                th("direct_sum_rel", Rule::AtMost(1e-12)),
                th("band_max_relative", Rule::AtMost(1e-3)),
                th("lemma_supercritical_change", Rule::Below(0.005)),
                th("lemma_critical_increasing", Rule::Holds),
                th("lemma_critical_trend_deviation", Rule::AtMost(0.05)),
            ],
        }],
    },
    ExperimentPreset {
        name: "decay",
        criterion: 5,
        command: Command::Decay,
        study: Study::Decay,
        summary: "log-log slope of the sup norm, 2D on [1, 50] and 3D on [1, 20]",
        variants: &[
            Variant {
                label: "2d",
                overrides: &[
                    ("dim", "2"),
                    ("n", "512"),
                    ("box", "auto"),
                    ("eps", "0.1"),
                    ("family", "gaussian"),
                    ("width", "2"),
                    ("dt", "0.05"),
                    ("t_end", "50"),
                    ("log_per_octave", "16"),
                ],
                thresholds: &[th("slope", Rule::Within(-1.1, -0.9))],
            },
            Variant {
                label: "3d",
                overrides: &[
                    ("dim", "3"),
                    ("n", "64"),
                    ("box", "auto"),
                    ("eps", "0.1"),
                    ("family", "gaussian"),
                    ("width", "4.3"),
                    ("dt", "0.05"),
                    ("t_end", "20"),
                    ("log_per_octave", "16"),
                ],
                thresholds: &[th("slope", Rule::Within(-1.65, -1.35))],
            },
        ],
    },
    ExperimentPreset {
        name: "scattering",
        criterion: 6,
        command: Command::Scattering,
        study: Study::Scattering,
        summary: "dyadic differences of the corrected profile and the asymptotic profile on the 2D decay run",
        variants: &[Variant {
            label: "2d",
            overrides: &[
                DECAY_2D[0],
                DECAY_2D[1],
                DECAY_2D[2],
                DECAY_2D[3],
                DECAY_2D[4],
                DECAY_2D[5],
                DECAY_2D[6],
                DECAY_2D[7],
                ("eps", "0.3"),
                ("diagnostics", "on"),
                ("dyadic_times", "2,4,8,16"),
            ],
            thresholds: &[
                th("g_diff_decreasing", Rule::Holds),
                th("g_below_f", Rule::Holds),
                th("asymptotic_decreasing", Rule::Holds),
            ],
        }],
    },
    ExperimentPreset {
        name: "residual",
        criterion: 7,
        command: Command::Residual,
        study: Study::Residual,
        summary: "centered-difference residual of the profile equation at t = 2",
        variants: &[Variant {
            label: "2d",
            overrides: &[
                ("dim", "2"),
                ("n", "256"),
                ("box", "64"),
                ("eps", "0.3"),
                ("family", "gaussian"),
                ("width", "2"),
                ("dt", "0.001"),
                ("t_end", "2.2"),
                ("snapshot_stride", "100"),
                ("residual_center", "2"),
                ("residual_spacings", "0.2,0.1"),
            ],
            thresholds: &[
                th("residual_ratio", Rule::Within(3.5, 4.5)),
                th("residual_relative", Rule::AtMost(0.05)),
            ],
        }],
    },
    ExperimentPreset {
        name: "determinism",
        criterion: 8,
        command: Command::Run,
        study: Study::Determinism,
        summary: "a seeded run with diagnostics repeated twice, outputs compared byte for byte",
        variants: &[Variant {
            label: "2d",
            overrides: &[
                ("dim", "2"),
                ("n", "256"),
                ("box", "56"),
                ("eps", "0.2"),
                ("family", "random"),
                ("bumps", "3"),
                ("seed", "42"),
                ("dt", "0.01"),
                ("t_end", "2"),
                ("log_per_octave", "4"),
                ("diagnostics", "on"),
                ("rhs_terms", "on"),
            ],
            thresholds: &[th("outputs_identical", Rule::Holds)],
        }],
    },
];

pub fn find(name: &str) -> Option<&'static ExperimentPreset> {
    PRESETS.iter().find(|p| p.name == name)
}

/// Preset used when a subcommand is given no `--preset`.
pub fn default_for(command: Command) -> Option<&'static ExperimentPreset> {
    match command {
        Command::Run => None,
        Command::VerifyOps => find("identities"),
        Command::KernelCheck => find("kernel"),
        Command::Decay => find("decay"),
        Command::Scattering => find("scattering"),
        Command::Residual => find("residual"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Settings;

    #[test]
    fn one_preset_per_criterion() {
        let mut seen: Vec<u8> = PRESETS.iter().map(|p| p.criterion).collect();
        seen.sort_unstable();
        assert_eq!(seen, (1..=8).collect::<Vec<u8>>());
    }

    #[test]
    fn presets_resolve() {
        for p in PRESETS {
            for v in p.variants {
                let entries = p.entries(v);
                Settings::resolve(&[&entries]).unwrap_or_else(|e| panic!("{}: {e}", p.name));
                assert!(!v.thresholds.is_empty());
            }
        }
    }

    #[test]
    fn scattering_shares_the_decay_run() {
        let decay = find("decay").unwrap().variants[0].overrides;
        let scat = find("scattering").unwrap().variants[0].overrides;
        for (k, v) in DECAY_2D {
            assert!(scat.contains(&(k, v)), "{k}");
            if *k != "eps" {
                assert!(decay.contains(&(k, v)), "{k}");
            }
        }
    }
}
