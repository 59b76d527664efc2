use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::config::{ExperimentConfig, OutputFormat};
use crate::error::RunError;

pub const REPORT_SCHEMA: &str = "misspec-report/v1";

/// One flat CSV row of scalar values.
pub type Row = Map<String, Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportStatus {
    Complete,
    /// The pipeline failed after producing some results.
    Partial,
    Failed,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub config: ExperimentConfig,
    pub status: ReportStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Full results, including tensors.
    pub results: Map<String, Value>,
    /// Scalar summary, one row per reward pair or certificate.
    pub rows: Vec<Row>,
    /// Wall-clock only; not part of the reproducibility contract.
    pub timings: Timings,
}

impl Report {
    pub fn is_success(&self) -> bool {
        self.status == ReportStatus::Complete
    }

    /// The report as JSON with timings removed, for comparing reruns.
    pub fn deterministic_json(&self) -> String {
        let mut copy = self.clone();
        copy.timings = Timings::default();
        serde_json::to_string(&copy).expect("report serializes")
    }
}

/// Writes the report to `path`, or to stdout when `path` is `None`.
pub fn emit_report(report: &Report, format: OutputFormat, path: Option<&Path>) -> Result<(), RunError> {
    match path {
        Some(p) => {
            let mut out = BufWriter::new(File::create(p)?);
            write_report(report, format, &mut out)?;
            out.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            write_report(report, format, &mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}

pub fn write_report(report: &Report, format: OutputFormat, out: &mut dyn Write) -> Result<(), RunError> {
    match format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, report)?;
            writeln!(out)?;
        }
        OutputFormat::Csv => write_csv(&report.rows, out)?,
    }
    Ok(())
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Columns are the union of row keys, sorted; missing cells are empty.
fn write_csv(rows: &[Row], out: &mut dyn Write) -> Result<(), RunError> {
    let columns: BTreeSet<&str> = rows.iter().flat_map(|r| r.keys().map(String::as_str)).collect();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&columns)?;
    for row in rows {
        w.write_record(columns.iter().map(|c| row.get(*c).map(scalar).unwrap_or_default()))?;
    }
    w.flush()?;
    Ok(())
}
