//! Report rows, verdict aggregation, and the JSON/CSV writers.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{config, ExperimentError, ExperimentSpec};

/// A Monte Carlo figure with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

/// One grid point of a study. Exact quantities, estimates, bound values,
/// and verdicts live in separate maps so a reader never has to guess which
/// numbers carry sampling error.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub key: String,
    #[serde(default)]
    pub exact: BTreeMap<String, f64>,
    #[serde(default)]
    pub estimates: BTreeMap<String, Estimate>,
    #[serde(default)]
    pub bounds: BTreeMap<String, f64>,
    #[serde(default)]
    pub verdicts: BTreeMap<String, bool>,
}

impl ReportRow {
    pub fn new(key: impl Into<String>) -> ReportRow {
        ReportRow {
            key: key.into(),
            ..ReportRow::default()
        }
    }

    pub fn exact(&mut self, name: &str, value: f64) {
        self.exact.insert(name.to_string(), value);
    }

    pub fn estimate(&mut self, name: &str, value: f64, se: f64) {
        self.estimates.insert(name.to_string(), Estimate { value, se });
    }

    pub fn bound(&mut self, name: &str, value: f64) {
        self.bounds.insert(name.to_string(), value);
    }

    pub fn verdict(&mut self, name: &str, ok: bool) {
        self.verdicts.insert(name.to_string(), ok);
    }
}

/// Everything a study produced, tied to the spec digest that configured it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub seed: u64,
    pub spec_digest: String,
    pub rows: Vec<ReportRow>,
    /// True when every verdict in every row passed. An empty report passes.
    pub all_pass: bool,
}

impl ExperimentReport {
    pub fn new(spec: &ExperimentSpec, rows: Vec<ReportRow>) -> ExperimentReport {
        let all_pass = rows
            .iter()
            .all(|row| row.verdicts.values().all(|&ok| ok));
        ExperimentReport {
            kind: spec.kind.name().to_string(),
            seed: spec.seed,
            spec_digest: spec.digest(),
            rows,
            all_pass,
        }
    }

    /// Names of the verdicts that failed, as `key/verdict` paths.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for row in &self.rows {
            for (name, &ok) in &row.verdicts {
                if !ok {
                    out.push(format!("{}/{}", row.key, name));
                }
            }
        }
        out
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json_str(s: &str) -> Result<ExperimentReport, ExperimentError> {
        serde_json::from_str(s).map_err(|e| config(format!("bad report JSON: {e}")))
    }

    /// Long-format CSV: one line per figure, classed as exact, estimate,
    /// bound, or verdict. Floats print in shortest round-trip form and rows
    /// follow grid order, so equal reports serialize to equal bytes.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# kind: {}", self.kind)?;
        writeln!(w, "# seed: {}", self.seed)?;
        writeln!(w, "# spec: {}", self.spec_digest)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["key", "metric", "class", "value", "se"])?;
        for row in &self.rows {
            for (name, value) in &row.exact {
                csv.write_record([&row.key, name, "exact", &value.to_string(), ""])?;
            }
            for (name, est) in &row.estimates {
                csv.write_record([
                    &row.key,
                    name,
                    "estimate",
                    &est.value.to_string(),
                    &est.se.to_string(),
                ])?;
            }
            for (name, value) in &row.bounds {
                csv.write_record([&row.key, name, "bound", &value.to_string(), ""])?;
            }
            for (name, &ok) in &row.verdicts {
                let value = if ok { "true" } else { "false" };
                csv.write_record([&row.key, name, "verdict", value, ""])?;
            }
        }
        csv.flush()
    }

    /// Writes `<kind>.json` and `<kind>.csv` under `out_dir`, creating the
    /// directory if needed, and returns the two paths.
    pub fn write_files(
        &self,
        out_dir: &std::path::Path,
    ) -> Result<(std::path::PathBuf, std::path::PathBuf), ExperimentError> {
        std::fs::create_dir_all(out_dir)?;
        let json_path = out_dir.join(format!("{}.json", self.kind));
        let csv_path = out_dir.join(format!("{}.csv", self.kind));
        std::fs::write(&json_path, self.to_json_string())?;
        let file = std::fs::File::create(&csv_path)?;
        self.write_csv(std::io::BufWriter::new(file))?;
        Ok((json_path, csv_path))
    }
}
