//! CSV, JSON and SVG result files.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{Format, Scale};
use crate::error::CliError;
use crate::plot;
use crate::runner::ResultRecord;

pub const CSV_COLUMNS: [&str; 8] = [
    "sweep_param",
    "sweep_value",
    "p_exact",
    "p_leading",
    "p_classical",
    "enhancement",
    "leakage",
    "flagged",
];

fn number(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:e}"),
        _ => String::new(),
    }
}

pub fn csv_string(records: &[ResultRecord]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.write_record([
            r.sweep_param.map(|p| p.name().to_string()).unwrap_or_default(),
            number(r.sweep_value),
            number(r.p_exact),
            number(r.p_leading),
            number(Some(r.p_classical)),
            number(r.enhancement),
            number(r.leakage),
            r.flagged.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn json_string(records: &[ResultRecord]) -> serde_json::Result<String> {
    serde_json::to_string_pretty(records).map(|s| s + "\n")
}

/// Writes `results.<ext>` for each format and returns the paths in format order.
pub fn emit(records: &[ResultRecord], formats: &[Format], dir: &Path, scale: Scale) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut formats = formats.to_vec();
    formats.sort();
    formats.dedup();
    let mut written = Vec::new();
    for f in formats {
        let (name, body) = match f {
            Format::Csv => ("results.csv", csv_string(records).map_err(|e| CliError::io(dir, e))?),
            Format::Json => ("results.json", json_string(records).map_err(|e| CliError::io(dir, e))?),
            Format::Svg => ("results.svg", plot::svg(records, scale)),
        };
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
