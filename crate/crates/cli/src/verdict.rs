//! Versioned JSON verdicts and exit status.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::presets::{Rule, Threshold};

pub const SCHEMA: &str = "sbp-verdict";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Abort,
    Rejected,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Rejected => 2,
            Status::Abort => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Abort => "ABORT",
            Status::Rejected => "REJECTED",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Metric {
    Flag(bool),
    Number(f64),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics(pub BTreeMap<String, Metric>);

impl Metrics {
    pub fn num(&mut self, name: impl Into<String>, value: f64) {
        self.0.insert(name.into(), Metric::Number(value));
    }

    pub fn flag(&mut self, name: impl Into<String>, value: bool) {
        self.0.insert(name.into(), Metric::Flag(value));
    }

    pub fn get(&self, name: &str) -> Option<Metric> {
        self.0.get(name).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub metric: String,
    pub rule: String,
    pub value: Option<Metric>,
    pub pass: bool,
}

pub fn evaluate(t: &Threshold, metrics: &Metrics) -> Check {
    let value = metrics.get(t.metric);
    let pass = match (t.rule, value) {
        (Rule::AtMost(x), Some(Metric::Number(v))) => v <= x,
        (Rule::Below(x), Some(Metric::Number(v))) => v < x,
        (Rule::Within(lo, hi), Some(Metric::Number(v))) => v >= lo && v <= hi,
        (Rule::Holds, Some(Metric::Flag(b))) => b,
        _ => false,
    };
    Check {
        metric: t.metric.to_string(),
        rule: t.rule.describe(),
        value,
        pass,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantVerdict {
    pub label: String,
    pub status: Status,
    pub config: BTreeMap<String, String>,
    pub metrics: Metrics,
    pub checks: Vec<Check>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub schema: String,
    pub version: u32,
    pub command: String,
    pub preset: Option<String>,
    pub criterion: Option<u8>,
    pub status: Status,
    pub variants: Vec<VariantVerdict>,
    pub artifacts: Vec<String>,
}

impl Verdict {
    pub fn new(command: &str, preset: Option<&str>, criterion: Option<u8>) -> Self {
        Self {
            schema: SCHEMA.into(),
            version: SCHEMA_VERSION,
            command: command.into(),
            preset: preset.map(str::to_string),
            criterion,
            status: Status::Pass,
            variants: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn push(&mut self, v: VariantVerdict) {
        self.status = self.status.max(v.status);
        self.variants.push(v);
    }
}
