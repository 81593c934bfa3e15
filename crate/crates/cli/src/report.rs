//! Report assembly and output: one JSON document per run and a CSV table with
//! the fixed header `quantity,eps,value,err_estimate,slope,predicted,verdict`.

use std::path::Path;
use std::time::{Duration, Instant};

use hstab_core::grid::GridSpec;
use hstab_core::interactions::ScalingReport;
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

pub const VERSION: &str = concat!("hstab ", env!("CARGO_PKG_VERSION"));

pub const CSV_HEADER: [&str; 7] = ["quantity", "eps", "value", "err_estimate", "slope", "predicted", "verdict"];

/// A single pass/fail statement about a number.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub quantity: String,
    pub eps: Option<f64>,
    pub value: f64,
    pub err_estimate: Option<f64>,
    /// Reference value the check compares against.
    pub predicted: f64,
    /// How `value` is compared, e.g. `"<="` or `"|rel| <= 0.1"`.
    pub rule: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(quantity: &str, eps: Option<f64>, value: f64, bound: f64) -> Self {
        Check {
            quantity: quantity.into(),
            eps,
            value,
            err_estimate: None,
            predicted: bound,
            rule: "<=".into(),
            passed: value <= bound,
        }
    }

    pub fn at_least(quantity: &str, eps: Option<f64>, value: f64, bound: f64) -> Self {
        Check {
            quantity: quantity.into(),
            eps,
            value,
            err_estimate: None,
            predicted: bound,
            rule: ">=".into(),
            passed: value >= bound,
        }
    }

    /// `|value/predicted - 1| <= tolerance`.
    pub fn relative(quantity: &str, eps: Option<f64>, value: f64, predicted: f64, tolerance: f64) -> Self {
        Check {
            quantity: quantity.into(),
            eps,
            value,
            err_estimate: None,
            predicted,
            rule: format!("|rel| <= {tolerance}"),
            passed: (value / predicted - 1.0).abs() <= tolerance,
        }
    }

    pub fn with_error(mut self, err: f64) -> Self {
        self.err_estimate = Some(err);
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GridInfo {
    pub eps: Option<f64>,
    pub spec: GridSpec,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub version: &'static str,
    pub subcommand: String,
    pub config: RunConfig,
    pub grids: Vec<GridInfo>,
    pub scaling: Vec<ScalingReport>,
    pub checks: Vec<Check>,
    /// Per-point data specific to the subcommand.
    pub data: serde_json::Value,
    pub notes: Vec<String>,
    /// Sweep points dropped because the budget ran out.
    pub truncated: Vec<f64>,
    pub passed: bool,
    pub elapsed_seconds: f64,
}

impl Report {
    pub fn new(subcommand: &str, config: &RunConfig) -> Self {
        Report {
            version: VERSION,
            subcommand: subcommand.into(),
            config: config.clone(),
            grids: Vec::new(),
            scaling: Vec::new(),
            checks: Vec::new(),
            data: serde_json::Value::Null,
            notes: Vec::new(),
            truncated: Vec::new(),
            passed: false,
            elapsed_seconds: 0.0,
        }
    }

    pub fn finish(&mut self, started: Instant) {
        self.passed = self.scaling.iter().all(|r| r.passed) && self.checks.iter().all(|c| c.passed);
        self.elapsed_seconds = started.elapsed().as_secs_f64();
    }

    pub fn csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(CSV_HEADER).map_err(io)?;
        let num = |v: f64| format!("{v:e}");
        let opt = |v: Option<f64>| v.map_or(String::new(), num);
        let verdict = |b: bool| if b { "pass" } else { "fail" }.to_string();
        for r in &self.scaling {
            let predicted = if r.predicted.is_nan() { String::new() } else { num(r.predicted) };
            for p in &r.points {
                w.write_record([
                    r.quantity.clone(),
                    num(p.eps),
                    num(p.value),
                    num(p.err),
                    num(r.fit.slope),
                    predicted.clone(),
                    verdict(r.passed),
                ])
                .map_err(io)?;
            }
        }
        for c in &self.checks {
            w.write_record([
                c.quantity.clone(),
                opt(c.eps),
                num(c.value),
                opt(c.err_estimate),
                String::new(),
                num(c.predicted),
                verdict(c.passed),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }

    /// Write `<stem>.json`, `<stem>.csv` and the resolved `config.txt`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(), CliError> {
        let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        let json = serde_json::to_string_pretty(self).map_err(|e| CliError::Io(e.to_string()))?;
        std::fs::write(dir.join(format!("{stem}.json")), json + "\n").map_err(io)?;
        std::fs::write(dir.join(format!("{stem}.csv")), self.csv()?).map_err(io)?;
        std::fs::write(dir.join("config.txt"), self.config.to_kv()).map_err(io)?;
        Ok(())
    }

    /// One line per verdict, for the terminal.
    pub fn summary(&self) -> Vec<String> {
        let tag = |b: bool| if b { "PASS" } else { "FAIL" };
        let mut lines = Vec::new();
        for r in &self.scaling {
            let extra = r.band_ratio.map_or(String::new(), |b| format!(" band max/min {b:.3}"));
            let predicted = if r.predicted.is_nan() {
                "increasing as eps decreases".to_string()
            } else {
                format!("predicted {}", r.predicted)
            };
            lines.push(format!(
                "{} {:<28} slope {:.4} ({predicted}){extra}",
                tag(r.passed),
                r.quantity,
                r.fit.slope,
            ));
        }
        for c in &self.checks {
            let at = c.eps.map_or(String::new(), |e| format!(" at eps={e}"));
            lines.push(format!(
                "{} {:<28} {:.6e} {} {:.6e}{}",
                tag(c.passed),
                c.quantity,
                c.value,
                c.rule,
                c.predicted,
                at
            ));
        }
        for e in &self.truncated {
            lines.push(format!("SKIP eps={e} (budget exhausted)"));
        }
        for n in &self.notes {
            lines.push(format!("NOTE {n}"));
        }
        lines
    }
}

/// Wall-clock budget for a sweep.
#[derive(Clone, Copy, Debug)]
pub struct Budget {
    start: Instant,
    limit: Duration,
}

impl Budget {
    pub fn new(seconds: f64) -> Self {
        Budget {
            start: Instant::now(),
            limit: Duration::from_secs_f64(seconds),
        }
    }

    pub fn exhausted(&self) -> bool {
        self.start.elapsed() > self.limit
    }
}
