//! Report assembly and the on-disk formats: one pretty-printed summary JSON,
//! one CSV per table, and a round-trip echo of the effective configuration.
//! Everything written here is byte-deterministic for a fixed config and
//! seed, so reruns can be diffed directly.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use lorenzlab_core::Check;
use serde::Serialize;

use crate::config::Config;

/// Render one float for CSV: scientific notation with 17 significant
/// digits, so every value round-trips exactly and never depends on locale.
pub fn csv_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One CSV file: a header row plus data rows, comma-separated, LF endings.
pub struct CsvTable {
    pub file_name: String,
    header: String,
    rows: Vec<String>,
}

impl CsvTable {
    pub fn new(file_name: &str, header: &str) -> Self {
        CsvTable {
            file_name: file_name.to_string(),
            header: header.to_string(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, cells: &[String]) {
        self.rows.push(cells.join(","));
    }

    pub fn render(&self) -> String {
        let mut text = String::with_capacity((self.rows.len() + 1) * 64);
        text.push_str(&self.header);
        text.push('\n');
        for row in &self.rows {
            text.push_str(row);
            text.push('\n');
        }
        text
    }
}

/// One suite's verdicts: named checks with margins, scalar statistics, and
/// the table files the suite produced.
#[derive(Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub all_pass: bool,
    pub checks: Vec<Check>,
    pub stats: BTreeMap<String, f64>,
    pub tables: Vec<String>,
}

impl SuiteReport {
    pub fn new(suite: &str) -> Self {
        SuiteReport {
            suite: suite.to_string(),
            all_pass: true,
            checks: Vec::new(),
            stats: BTreeMap::new(),
            tables: Vec::new(),
        }
    }

    /// Record a check passing iff `margin > 0`.
    pub fn check(&mut self, id: &str, margin: f64) {
        self.push(Check::from_margin(id, margin));
    }

    pub fn push(&mut self, check: Check) {
        self.all_pass &= check.pass;
        self.checks.push(check);
    }

    pub fn stat(&mut self, key: &str, value: f64) {
        self.stats.insert(key.to_string(), value);
    }

    pub fn min_margin(&self) -> f64 {
        self.checks.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min)
    }

    pub fn failed_ids(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.id.as_str()).collect()
    }
}

/// A suite's report together with the tables to write next to the summary.
pub struct SuiteOutcome {
    pub report: SuiteReport,
    pub tables: Vec<CsvTable>,
}

/// The whole run, serialized to `summary.json`.
#[derive(Serialize)]
pub struct ReportBundle {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub all_pass: bool,
    pub suites: Vec<SuiteReport>,
}

/// Write the summary, the config echo and every table into `out_dir`,
/// creating it if needed.
pub fn write_outputs(
    out_dir: &Path,
    cfg: &Config,
    bundle: &ReportBundle,
    tables: &[CsvTable],
) -> Result<()> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;

    let mut json = serde_json::to_string_pretty(bundle).context("serializing summary")?;
    json.push('\n');
    let summary = out_dir.join("summary.json");
    fs::write(&summary, json).with_context(|| format!("writing {}", summary.display()))?;

    let echo = toml::to_string_pretty(cfg).context("serializing config echo")?;
    let echo_path = out_dir.join("config_echo.toml");
    fs::write(&echo_path, echo).with_context(|| format!("writing {}", echo_path.display()))?;

    for table in tables {
        let path = out_dir.join(&table.file_name);
        fs::write(&path, table.render())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
