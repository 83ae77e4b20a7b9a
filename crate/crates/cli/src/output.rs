//! Artifacts on disk: `diagnostics.csv`, `summary.json` and `plots/*.svg`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::{Command, RunConfig};
use crate::failure::Failure;
use crate::plot::Plot;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Completed,
    BlowUp,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct BlowUpInfo {
    pub detected: bool,
    pub t: Option<f64>,
    pub max_abs_dxu: Option<f64>,
}

/// One pass/fail line of the summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            pass: value <= tolerance,
            value: Some(value),
            tolerance: Some(tolerance),
            detail: None,
        }
    }

    pub fn at_least(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            pass: value >= tolerance,
            ..Self::at_most(name, value, tolerance)
        }
    }

    pub fn holds(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            value: None,
            tolerance: None,
            detail: Some(detail.into()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema: u32,
    pub command: Command,
    pub status: Status,
    pub config: RunConfig,
    pub blow_up: BlowUpInfo,
    pub drifts: Value,
    pub checks: Vec<Check>,
    pub all_checks_pass: bool,
    pub results: Value,
    pub error: Option<String>,
}

impl Summary {
    pub fn new(command: Command, config: &RunConfig) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            command,
            status: Status::Completed,
            config: config.clone(),
            blow_up: BlowUpInfo::default(),
            drifts: Value::Null,
            checks: Vec::new(),
            all_checks_pass: true,
            results: Value::Null,
            error: None,
        }
    }

    pub fn blow_up(&mut self, t: f64, max_abs_dxu: Option<f64>) {
        self.status = Status::BlowUp;
        self.blow_up = BlowUpInfo {
            detected: true,
            t: Some(t),
            max_abs_dxu,
        };
    }

    /// Summary of a run that stopped with `failure`.
    pub fn from_failure(command: Command, config: &RunConfig, failure: &Failure) -> Self {
        let mut s = Self::new(command, config);
        match failure {
            Failure::BlowUp { t, max_abs_dxu } => s.blow_up(*t, Some(*max_abs_dxu)),
            _ => s.status = Status::Failed,
        }
        s.error = Some(failure.to_string());
        s
    }

    pub fn check(&mut self, c: Check) {
        self.all_checks_pass &= c.pass;
        self.checks.push(c);
    }

    pub fn exit_code(&self) -> u8 {
        match self.status {
            Status::Completed => 0,
            Status::BlowUp => 2,
            Status::Failed => 3,
        }
    }
}

/// Output directory of one run.
pub struct Output {
    dir: PathBuf,
    plots: bool,
}

impl Output {
    pub fn create(dir: &Path, plots: bool) -> Result<Self, Failure> {
        fs::create_dir_all(dir)?;
        if plots {
            fs::create_dir_all(dir.join("plots"))?;
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            plots,
        })
    }

    /// Writes `diagnostics.csv` from a header and serializable rows.
    pub fn diagnostics<R: Serialize>(&self, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<(), Failure> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(self.dir.join("diagnostics.csv"))?;
        w.write_record(header)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn plot(&self, name: &str, plot: &Plot) -> Result<(), Failure> {
        if self.plots {
            fs::write(self.dir.join("plots").join(format!("{name}.svg")), plot.to_svg())?;
        }
        Ok(())
    }

    pub fn summary(&self, s: &Summary) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(s)?;
        text.push('\n');
        fs::write(self.dir.join("summary.json"), text)?;
        Ok(())
    }
}
