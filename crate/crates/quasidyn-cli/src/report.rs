//! Defect reports and their JSON, CSV and Markdown renderings.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

/// One evaluated check at one sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    /// Everything needed to re-run this sample in isolation.
    pub point: Value,
    /// Serialised as `null` when not finite.
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
}

impl CheckRecord {
    pub fn measured(check: &str, point: Value, residual: f64, tolerance: f64) -> Self {
        let finite = residual.is_finite();
        Self {
            check: check.to_string(),
            point,
            residual: finite.then_some(residual),
            tolerance,
            pass: finite && residual.abs() <= tolerance,
            reason: (!finite).then(|| "non-finite residual".to_string()),
        }
    }

    pub fn failed(check: &str, point: Value, tolerance: f64, reason: impl Into<String>) -> Self {
        Self {
            check: check.to_string(),
            point,
            residual: None,
            tolerance,
            pass: false,
            reason: Some(reason.into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub records: usize,
    pub failures: usize,
    /// `null` when some record has no finite residual.
    pub max_residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub checks: BTreeMap<String, CheckSummary>,
    pub overall_pass: bool,
}

impl Summary {
    pub fn of(records: &[CheckRecord]) -> Self {
        let mut checks: BTreeMap<String, CheckSummary> = BTreeMap::new();
        for r in records {
            let e = checks.entry(r.check.clone()).or_insert(CheckSummary {
                records: 0,
                failures: 0,
                max_residual: Some(0.0),
                tolerance: r.tolerance,
                pass: true,
            });
            e.records += 1;
            if !r.pass {
                e.failures += 1;
                e.pass = false;
            }
            e.max_residual = match (e.max_residual, r.residual) {
                (Some(a), Some(b)) => Some(a.max(b.abs())),
                _ => None,
            };
            e.tolerance = e.tolerance.max(r.tolerance);
        }
        let overall_pass = records.iter().all(|r| r.pass);
        Self { checks, overall_pass }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub algebra: String,
    pub fd_step: f64,
    pub richardson: bool,
    pub seed: Option<u64>,
    pub version: String,
}

/// `r` and `theta` of an su(2) triple at one chart value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleRow {
    pub alpha: f64,
    pub r_12: f64,
    pub r_13: f64,
    pub r_23: f64,
    pub theta_1: f64,
    pub theta_2: f64,
    pub theta_3: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    pub scenario: String,
    pub kind: String,
    pub environment: Environment,
    pub summary: Summary,
    pub records: Vec<CheckRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub triple: Vec<TripleRow>,
    /// The only field that differs between identical runs.
    pub timestamp: String,
}

impl DefectReport {
    pub fn new(
        scenario: String,
        kind: String,
        environment: Environment,
        records: Vec<CheckRecord>,
        triple: Vec<TripleRow>,
    ) -> Self {
        let summary = Summary::of(&records);
        let timestamp = time::OffsetDateTime::now_utc()
            .format(&time::format_description::well_known::Rfc3339)
            .unwrap_or_default();
        Self {
            scenario,
            kind,
            environment,
            summary,
            records,
            triple,
            timestamp,
        }
    }

    pub fn passed(&self) -> bool {
        self.summary.overall_pass
    }

    /// Canonical JSON: fixed key order, two-space indentation, trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// The canonical JSON with the timestamp blanked, for comparing runs.
    pub fn to_json_untimed(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.timestamp.clear();
        copy.to_json()
    }

    /// Records flattened to one row each; the point is embedded as JSON.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["scenario", "check", "residual", "tolerance", "pass", "reason", "point"])?;
        for r in &self.records {
            w.write_record([
                self.scenario.as_str(),
                r.check.as_str(),
                &r.residual.map(|v| format!("{v:e}")).unwrap_or_default(),
                &format!("{:e}", r.tolerance),
                if r.pass { "true" } else { "false" },
                r.reason.as_deref().unwrap_or(""),
                &serde_json::to_string(&r.point)?,
            ])?;
        }
        csv_string(w)
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        s.push_str(&format!("# {} ({})\n\n**{verdict}**\n\n", self.scenario, self.kind));
        let env = &self.environment;
        s.push_str(&format!(
            "algebra `{}`, fd step {:e}{}, seed {}, version {}\n\n",
            env.algebra,
            env.fd_step,
            if env.richardson { " (Richardson)" } else { "" },
            env.seed.map(|v| v.to_string()).unwrap_or_else(|| "-".into()),
            env.version
        ));
        s.push_str("| check | records | failures | max residual | tolerance | result |\n");
        s.push_str("|---|---:|---:|---:|---:|---|\n");
        for (name, c) in &self.summary.checks {
            s.push_str(&format!(
                "| {name} | {} | {} | {} | {:e} | {} |\n",
                c.records,
                c.failures,
                c.max_residual
                    .map(|v| format!("{v:.3e}"))
                    .unwrap_or_else(|| "n/a".into()),
                c.tolerance,
                if c.pass { "pass" } else { "FAIL" }
            ));
        }
        let failed: Vec<&CheckRecord> = self.records.iter().filter(|r| !r.pass).collect();
        if !failed.is_empty() {
            s.push_str("\n## Failed records\n\n");
            for r in failed {
                s.push_str(&format!(
                    "- `{}` residual {} at `{}`{}\n",
                    r.check,
                    r.residual.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "n/a".into()),
                    serde_json::to_string(&r.point).unwrap_or_default(),
                    r.reason.as_ref().map(|m| format!(": {m}")).unwrap_or_default()
                ));
            }
        }
        s
    }

    pub fn triple_csv(&self) -> Result<String> {
        triple_rows_csv(&self.triple)
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
            Format::Md => Ok(self.to_markdown()),
        }
    }
}

pub fn triple_rows_csv(rows: &[TripleRow]) -> Result<String> {
    rows_csv(
        rows,
        &["alpha", "r_12", "r_13", "r_23", "theta_1", "theta_2", "theta_3"],
    )
}

/// Serialises rows with a header taken from the row type.
pub fn rows_csv<R: Serialize>(rows: &[R], header: &[&str]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record(header)?;
    }
    csv_string(w)
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::io("<csv buffer>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Md,
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Writes the report in `format` to `path`.
pub fn emit_report(report: &DefectReport, format: Format, path: &Path) -> Result<()> {
    write_atomic(path, &report.render(format)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn env() -> Environment {
        Environment {
            algebra: "su2".into(),
            fd_step: 1e-5,
            richardson: false,
            seed: Some(1),
            version: "0.1.0".into(),
        }
    }

    #[test]
    fn empty_report_is_valid_json() {
        let r = DefectReport::new("empty".into(), "quasi_check".into(), env(), Vec::new(), Vec::new());
        let v: Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["records"], json!([]));
        assert_eq!(v["summary"]["overall_pass"], json!(true));
    }

    #[test]
    fn summary_tracks_the_worst_record() {
        let recs = vec![
            CheckRecord::measured("a", json!({"i": 0}), 1e-9, 1e-8),
            CheckRecord::measured("a", json!({"i": 1}), -3e-9, 1e-8),
            CheckRecord::measured("b", json!({"i": 0}), 1.0, 1e-8),
        ];
        let s = Summary::of(&recs);
        assert_eq!(s.checks["a"].max_residual, Some(3e-9));
        assert!(s.checks["a"].pass);
        assert!(!s.checks["b"].pass);
        assert!(!s.overall_pass);
    }

    #[test]
    fn non_finite_residuals_fail_and_serialise_as_null() {
        let r = CheckRecord::measured("a", json!(null), f64::NAN, 1.0);
        assert!(!r.pass);
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"residual\":null"));
        assert_eq!(Summary::of(&[r]).checks["a"].max_residual, None);
    }

    #[test]
    fn key_order_is_stable() {
        let r = DefectReport::new(
            "s".into(),
            "k".into(),
            env(),
            vec![CheckRecord::measured("a", json!([1]), 0.0, 1.0)],
            Vec::new(),
        );
        let j = r.to_json().unwrap();
        let pos = |k: &str| j.find(&format!("\"{k}\"")).unwrap();
        assert!(pos("scenario") < pos("kind") && pos("kind") < pos("environment"));
        assert!(pos("summary") < pos("records") && pos("records") < pos("timestamp"));
        assert_eq!(r.to_json_untimed().unwrap(), r.to_json_untimed().unwrap());
    }

    #[test]
    fn csv_and_markdown_render_failures() {
        let recs = vec![CheckRecord::failed(
            "jacobiator",
            json!({"sample": 3}),
            1e-5,
            "degenerate",
        )];
        let r = DefectReport::new("s".into(), "k".into(), env(), recs, Vec::new());
        let csv = r.to_csv().unwrap();
        assert!(csv.lines().nth(1).unwrap().contains("degenerate"));
        let md = r.to_markdown();
        assert!(md.contains("FAIL") && md.contains("\"sample\":3"));
    }

    #[test]
    fn triple_csv_header() {
        let rows = vec![TripleRow {
            alpha: 0.5,
            r_12: 1.0,
            r_13: 0.0,
            r_23: 0.0,
            theta_1: 0.0,
            theta_2: 0.0,
            theta_3: 1.0,
        }];
        let s = triple_rows_csv(&rows).unwrap();
        assert_eq!(
            s.lines().next().unwrap(),
            "alpha,r_12,r_13,r_23,theta_1,theta_2,theta_3"
        );
        assert_eq!(triple_rows_csv(&[]).unwrap().lines().count(), 1);
    }
}
