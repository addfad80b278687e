//! Versioned experiment reports and their JSON and CSV forms.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

pub const SCHEMA: &str = "rectsum.report/v1";

/// Metrics of one trial at one cap (or level, or box size).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub trial: usize,
    pub cap: usize,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub limit: f64,
}

/// One point of an exhaustion curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub cap: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub version: String,
    pub suite: String,
    /// Base of every logarithm in weights and functionals.
    pub log_base: String,
    pub config: ExperimentConfig,
    pub rows: Vec<Row>,
    /// Median of a metric across trials, against the cap.
    pub curves: BTreeMap<String, Vec<CurvePoint>>,
    pub summary: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub passed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            _ => bail!("unknown format '{s}' (expected json or csv)"),
        }
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    })
}

impl Report {
    pub fn new(suite: &str, config: &ExperimentConfig) -> Self {
        Self {
            schema: SCHEMA.to_string(),
            version: rectsum::VERSION.to_string(),
            suite: suite.to_string(),
            log_base: "e".to_string(),
            config: config.clone(),
            rows: Vec::new(),
            curves: BTreeMap::new(),
            summary: BTreeMap::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            passed: true,
        }
    }

    pub fn check(&mut self, name: &str, passed: bool, value: f64, limit: f64) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            value,
            limit,
        });
        self.passed &= passed;
    }

    /// Check `value <= limit`.
    pub fn check_at_most(&mut self, name: &str, value: f64, limit: f64) {
        self.check(name, value <= limit, value, limit);
    }

    /// Median of `metric` across trials at each cap.
    pub fn add_curve(&mut self, metric: &str) {
        let mut by_cap: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for row in &self.rows {
            if let Some(&v) = row.metrics.get(metric) {
                by_cap.entry(row.cap).or_default().push(v);
            }
        }
        let points = by_cap
            .into_iter()
            .filter_map(|(cap, vals)| median(&vals).map(|value| CurvePoint { cap, value }))
            .collect();
        self.curves.insert(metric.to_string(), points);
    }

    fn non_finite(&self) -> Option<String> {
        let rows = self.rows.iter().flat_map(|r| {
            r.metrics
                .iter()
                .map(move |(k, v)| (format!("rows[trial {}, cap {}].{k}", r.trial, r.cap), *v))
        });
        let summary = self.summary.iter().map(|(k, v)| (format!("summary.{k}"), *v));
        let checks = self.checks.iter().flat_map(|c| {
            [
                (format!("checks.{}.value", c.name), c.value),
                (format!("checks.{}.limit", c.name), c.limit),
            ]
        });
        let curves = self
            .curves
            .iter()
            .flat_map(|(k, pts)| pts.iter().map(move |p| (format!("curves.{k}"), p.value)));
        rows.chain(summary)
            .chain(checks)
            .chain(curves)
            .find(|(_, v)| !v.is_finite())
            .map(|(k, v)| format!("{k} = {v}"))
    }

    pub fn to_json(&self) -> Result<String> {
        if let Some(bad) = self.non_finite() {
            bail!("report holds a non-finite value: {bad}");
        }
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text).context("parsing report")?;
        if report.schema != SCHEMA {
            bail!("unsupported report schema '{}' (expected {SCHEMA})", report.schema);
        }
        Ok(report)
    }

    /// One line per row: `trial,cap,` then every metric in name order.
    pub fn to_csv(&self) -> Result<String> {
        let names: BTreeSet<&str> = self
            .rows
            .iter()
            .flat_map(|r| r.metrics.keys().map(String::as_str))
            .collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = ["trial", "cap"].into_iter().chain(names.iter().copied());
        w.write_record(header)?;
        for row in &self.rows {
            let mut record = vec![row.trial.to_string(), row.cap.to_string()];
            record.extend(
                names
                    .iter()
                    .map(|n| row.metrics.get(*n).map(|v| v.to_string()).unwrap_or_default()),
            );
            w.write_record(&record)?;
        }
        let bytes = w.into_inner().context("flushing csv")?;
        Ok(String::from_utf8(bytes)?)
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn write_output(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            let mut out = io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                // a closed reader (`| head`) is not an error
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
                r => r.context("writing stdout"),
            }
        }
    }
}

pub fn emit_report(report: &Report, format: Format, path: Option<&Path>) -> Result<()> {
    write_output(&report.render(format)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("demo", &ExperimentConfig::default());
        for trial in 0..2 {
            for cap in [8, 16, 32] {
                let mut metrics = BTreeMap::new();
                metrics.insert("ratio".into(), 1.0 + trial as f64 * 0.1 + cap as f64 / 1e3);
                if cap == 32 {
                    metrics.insert("quotient".into(), 1.01);
                }
                r.rows.push(Row { trial, cap, metrics });
            }
        }
        r.add_curve("ratio");
        r.summary.insert("max_ratio".into(), 1.132);
        r.check_at_most("median_quotient", 1.01, 1.10);
        r
    }

    #[test]
    fn json_round_trip() {
        let r = sample();
        let text = r.to_json().unwrap();
        assert_eq!(Report::from_json(&text).unwrap(), r);
        assert_eq!(Report::from_json(&text).unwrap().to_json().unwrap(), text);
    }

    #[test]
    fn csv_has_one_row_per_trial_and_cap() {
        let r = sample();
        let text = r.to_csv().unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "trial,cap,quotient,ratio");
        assert_eq!(lines.len() - 1, 2 * 3);
        assert_eq!(lines[1], "0,8,,1.008");
        assert_eq!(lines[3], "0,32,1.01,1.032");
    }

    #[test]
    fn curves_take_medians() {
        let r = sample();
        let c = &r.curves["ratio"];
        assert_eq!(c.len(), 3);
        assert_eq!(c[0].cap, 8);
        assert!((c[0].value - 1.058).abs() < 1e-12);
    }

    #[test]
    fn failed_check_fails_report() {
        let mut r = sample();
        assert!(r.passed);
        r.check_at_most("x", 2.0, 1.0);
        assert!(!r.passed);
    }

    #[test]
    fn non_finite_values_are_refused() {
        let mut r = sample();
        r.summary.insert("bad".into(), f64::NAN);
        assert!(r.to_json().unwrap_err().to_string().contains("summary.bad"));
    }

    #[test]
    fn wrong_schema_is_refused() {
        let text = sample().to_json().unwrap().replace(SCHEMA, "other/v9");
        assert!(Report::from_json(&text).is_err());
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }

    #[test]
    fn write_reports_path_on_failure() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = write_output("y", Some(&blocker.join("out.json"))).unwrap_err();
        assert!(format!("{err:#}").contains("file"));
    }
}
