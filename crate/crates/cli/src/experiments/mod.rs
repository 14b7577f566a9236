//! Studies behind the subcommands. Each one writes its artifacts, fills a
//! metric map and leaves pass/fail to the preset thresholds.

mod asymptotics;
mod checks;
mod trajectory;

use std::path::PathBuf;

use anyhow::Result;
use sbp_core::SbpError;

use crate::config::{ConfigError, Settings};
use crate::output::Artifacts;
use crate::presets::{ExperimentPreset, Study};
use crate::verdict::{Metrics, Status};

pub use asymptotics::compare;

pub struct Ctx<'a> {
    pub settings: Settings,
    pub preset: Option<&'static ExperimentPreset>,
    pub out: &'a mut Artifacts,
    pub metrics: &'a mut Metrics,
    pub resume: Option<PathBuf>,
}

impl Ctx<'_> {
    fn write_config(&mut self) -> Result<()> {
        let text = self.settings.to_text();
        self.out.text("config.txt", &text)
    }
}

pub fn execute(study: Option<Study>, ctx: &mut Ctx<'_>) -> Result<()> {
    match study {
        None => trajectory::plain(ctx),
        Some(Study::Conservation) => trajectory::conservation(ctx),
        Some(Study::Determinism) => trajectory::determinism(ctx),
        Some(Study::FreeFlow) => trajectory::free_flow(ctx),
        Some(Study::Identities) => checks::identities(ctx),
        Some(Study::Kernel) => checks::kernel(ctx),
        Some(Study::Decay) => asymptotics::decay(ctx),
        Some(Study::Scattering) => asymptotics::scattering(ctx),
        Some(Study::Residual) => asymptotics::residual(ctx),
    }
}

/// Maps a study error onto the verdict status it implies.
pub fn classify(err: &anyhow::Error) -> Status {
    if err.downcast_ref::<ConfigError>().is_some() {
        return Status::Rejected;
    }
    match err.downcast_ref::<SbpError>() {
        Some(SbpError::NumericalAbort { .. } | SbpError::OutsideBox { .. } | SbpError::NotLocalized { .. }) => {
            Status::Abort
        }
        Some(SbpError::ScatteringFailure(_) | SbpError::InsufficientData(_)) => Status::Fail,
        _ => Status::Rejected,
    }
}

/// `t` rendered for file names: `16`, `2.5`.
fn time_tag(t: f64) -> String {
    format!("{t}")
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes() {
        let abort = anyhow::Error::from(SbpError::NumericalAbort {
            t: 1.0,
            reason: "x".into(),
        });
        assert_eq!(classify(&abort), Status::Abort);
        let cfg = anyhow::Error::from(SbpError::BoxTooSmall("x".into())).context("while sizing");
        assert_eq!(classify(&cfg), Status::Rejected);
        let scat = anyhow::Error::from(SbpError::ScatteringFailure("x".into()));
        assert_eq!(classify(&scat), Status::Fail);
        assert_eq!(classify(&anyhow::anyhow!("io")), Status::Rejected);
    }

    #[test]
    fn decreasing() {
        assert!(strictly_decreasing(&[3.0, 2.0, 1.0]));
        assert!(!strictly_decreasing(&[3.0, 3.0]));
        assert!(strictly_decreasing(&[]));
        assert_eq!(time_tag(16.0), "16");
        assert_eq!(time_tag(2.5), "2.5");
    }
}
