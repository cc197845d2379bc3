//! CSV tables and JSON run summaries.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 17 significant digits, round-trippable.
pub fn fmt(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when value ≤ threshold.
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value <= threshold }
    }

    /// Passes when value ≥ threshold.
    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value >= threshold }
    }

    pub fn flag(name: &str, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, threshold: 1.0, pass: ok }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub params: serde_json::Value,
    pub checks: Vec<Check>,
    pub runtime_s: f64,
}

impl Summary {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Table with a fixed header.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out += &r.join(",");
            out.push('\n');
        }
        out
    }
}

/// Table of checks, one row each.
pub fn checks_table(checks: &[Check]) -> Table {
    let mut t = Table::new(&["name", "value", "threshold", "pass"]);
    for c in checks {
        t.push(vec![c.name.clone(), fmt(c.value), fmt(c.threshold), c.pass.to_string()]);
    }
    t
}

/// Writes `<stem>.csv` and `<stem>.json` under `dir`.
pub fn write_report(dir: &Path, stem: &str, csv: &str, summary: &Summary) -> Result<()> {
    if summary.checks.is_empty() {
        return Err(Error::Config("a report needs at least one check".into()));
    }
    fs::create_dir_all(dir)?;
    fs::write(dir.join(format!("{stem}.csv")), csv)?;
    fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(summary)?)?;
    Ok(())
}
