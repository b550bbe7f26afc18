//! CSV and JSON serialisation of series and reports.
//!
//! Floats are written with 17 significant digits, which round-trips every
//! finite `f64` exactly.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{ArtfimaError, Result};
use crate::series::{SeriesData, SeriesMeta};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `header` and one row per entry of `columns` (all the same length).
pub fn write_columns<W: Write>(out: W, header: &[&str], columns: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    let rows = columns.first().map_or(0, Vec::len);
    for i in 0..rows {
        w.write_record(columns.iter().map(|c| c[i].as_str()))?;
    }
    w.flush()?;
    Ok(())
}

/// `t,x` with `t` counting from 0.
pub fn write_series_csv<W: Write>(out: W, series: &SeriesData) -> Result<()> {
    let t = (0..series.len()).map(|i| i.to_string()).collect();
    let x = series.values.iter().map(|v| fmt_f64(*v)).collect();
    write_columns(out, &["t", "x"], &[t, x])
}

pub fn write_series_file(path: &Path, series: &SeriesData) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_series_csv(std::io::BufWriter::new(f), series)
}

/// Reads one numeric column of a headed CSV file. `column` is a header name
/// or, failing that, a zero-based index.
pub fn read_series_csv(path: &Path, column: &str) -> Result<SeriesData> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let idx = column_index(rdr.headers()?, column)?;
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(parse_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        let cell = rec.get(idx).unwrap_or("");
        let v: f64 = cell.parse().map_err(|_| ArtfimaError::Parse {
            line,
            message: format!("column {column}: '{cell}' is not a number"),
        })?;
        values.push(v);
    }
    let mut meta = SeriesMeta::new(format!("{}:{column}", path.display()));
    meta.history.push(format!("read {}", path.display()));
    SeriesData::new(values, meta)
}

pub(crate) fn column_index(headers: &csv::StringRecord, column: &str) -> Result<usize> {
    if let Some(i) = headers.iter().position(|h| h == column) {
        return Ok(i);
    }
    match column.parse::<usize>() {
        Ok(i) if i < headers.len() => Ok(i),
        _ => Err(ArtfimaError::InvalidArgument(format!(
            "no column '{column}' among [{}]",
            headers.iter().collect::<Vec<_>>().join(", ")
        ))),
    }
}

pub(crate) fn parse_error(e: csv::Error) -> ArtfimaError {
    match e.position() {
        Some(p) => ArtfimaError::Parse {
            line: p.line(),
            message: e.to_string(),
        },
        None => ArtfimaError::Csv(e),
    }
}

/// Serialises `value` as a JSON object carrying the schema tag.
pub fn to_json_report<T: Serialize>(value: &T) -> Result<Value> {
    let mut obj = match serde_json::to_value(value)? {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("data".into(), other);
            m
        }
    };
    obj.insert("schema".into(), Value::String(crate::JSON_SCHEMA.into()));
    Ok(Value::Object(obj))
}

pub fn write_json<W: Write, T: Serialize>(mut out: W, value: &T) -> Result<()> {
    let v = to_json_report(value)?;
    serde_json::to_writer_pretty(&mut out, &v)?;
    writeln!(out)?;
    Ok(())
}
