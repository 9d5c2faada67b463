//! CSV and JSON emission of experiment reports.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::inequality::InequalityReport;
use crate::error::{invalid, Result, TentError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = TentError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(invalid(format!("unknown report format `{other}`"))),
        }
    }
}

#[derive(Serialize)]
struct Row<'a> {
    item_id: usize,
    family: &'a str,
    ratio: f64,
    input_norm: f64,
    output_norm: f64,
    grid_h: f64,
    measurement: &'a str,
}

/// One row per ratio; only the header when there are none.
pub fn write_csv<W: Write>(report: &InequalityReport, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["item_id", "family", "ratio", "input_norm", "output_norm", "grid_h", "measurement"])?;
    for m in &report.measurements {
        for r in &m.items {
            w.serialize(Row {
                item_id: r.item_id,
                family: r.family.name(),
                ratio: r.ratio,
                input_norm: r.input_norm,
                output_norm: r.output_norm,
                grid_h: r.grid_h,
                measurement: &m.label,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Pretty-printed JSON of the whole report including the config echo.
pub fn write_json<W: Write>(report: &InequalityReport, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, report)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_report<W: Write>(report: &InequalityReport, format: ReportFormat, out: W) -> Result<()> {
    match format {
        ReportFormat::Csv => write_csv(report, out),
        ReportFormat::Json => write_json(report, out),
    }
}

pub fn emit_report(report: &InequalityReport, format: ReportFormat, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_report(report, format, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn read_json_report(path: &Path) -> Result<InequalityReport> {
    Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
}
