use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::checkpoint::write_atomic;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    /// `csv` for paths ending in `.csv`, JSON otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => ReportFormat::Csv,
            _ => ReportFormat::Json,
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidArgument(format!(
                "unknown report format {other:?}"
            ))),
        }
    }
}

/// A report with a flat tabular view for CSV output.
pub trait Tabular {
    fn columns(&self) -> Vec<&'static str>;
    fn rows(&self) -> Vec<Vec<String>>;
}

/// Writes `doc` as pretty JSON or as CSV, atomically.
pub fn emit_report<T: Serialize + Tabular>(
    doc: &T,
    format: ReportFormat,
    path: impl AsRef<Path>,
) -> Result<()> {
    let bytes = render_report(doc, format)?;
    write_atomic(path.as_ref(), |w| w.write_all(&bytes))
}

pub fn render_report<T: Serialize + Tabular>(doc: &T, format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Json => {
            let mut bytes =
                serde_json::to_vec_pretty(doc).map_err(|e| Error::Serialization(e.to_string()))?;
            bytes.push(b'\n');
            Ok(bytes)
        }
        ReportFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            let ser = |e: csv::Error| Error::Serialization(e.to_string());
            writer.write_record(doc.columns()).map_err(ser)?;
            for row in doc.rows() {
                writer.write_record(row).map_err(ser)?;
            }
            writer
                .into_inner()
                .map_err(|e| Error::Serialization(e.to_string()))
        }
    }
}

/// Reads back a JSON report written by [`emit_report`].
pub fn read_json_report<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))
}

pub(crate) fn num(x: f64) -> String {
    x.to_string()
}

pub(crate) fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
