//! Multi-source CSV ingestion with per-row merging and a transform chain.

use std::path::PathBuf;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{ArtfimaError, Result};
use crate::io::{column_index, parse_error};
use crate::series::{SeriesData, SeriesMeta};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub path: PathBuf,
    /// Header name, or a zero-based index when no header matches.
    pub column: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MergeRule {
    /// Mean of the readings present in a row; a lone reading is taken as is.
    MeanElseMax,
    /// Exactly one source, no missing readings.
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Transform {
    Log,
    Demean,
    /// Zero-based, `start` inclusive, `end` exclusive.
    Subseries {
        start: usize,
        end: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSpec {
    pub sources: Vec<Source>,
    /// Column joining rows across sources; rows are aligned by position when
    /// absent.
    pub key: Option<String>,
    pub merge: MergeRule,
    pub transforms: Vec<Transform>,
    /// Extra cell value treated as missing, besides empty cells and `NA`/`NaN`.
    pub missing_sentinel: Option<f64>,
}

impl IngestSpec {
    pub fn single(path: impl Into<PathBuf>, column: impl Into<String>) -> Self {
        Self {
            sources: vec![Source {
                path: path.into(),
                column: column.into(),
            }],
            key: None,
            merge: MergeRule::Single,
            transforms: Vec::new(),
            missing_sentinel: None,
        }
    }
}

/// One source's readings: `(key, line, value)` with `None` for missing.
type Readings = Vec<(String, u64, Option<f64>)>;

fn is_missing_token(cell: &str) -> bool {
    cell.is_empty() || matches!(cell.to_ascii_lowercase().as_str(), "na" | "nan")
}

fn read_source(src: &Source, key: Option<&str>, sentinel: Option<f64>) -> Result<Readings> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(&src.path)
        .map_err(parse_error)?;
    let headers = rdr.headers().map_err(parse_error)?.clone();
    let col = column_index(&headers, &src.column)?;
    let key_col = key.map(|k| column_index(&headers, k)).transpose()?;
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(parse_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        let k = match key_col {
            Some(i) => rec.get(i).unwrap_or("").to_string(),
            None => row.to_string(),
        };
        let cell = rec.get(col).unwrap_or("");
        let value = if is_missing_token(cell) {
            None
        } else {
            let v: f64 = cell.parse().map_err(|_| ArtfimaError::Parse {
                line,
                message: format!("{}: '{cell}' is not a number", src.path.display()),
            })?;
            if sentinel == Some(v) || v.is_nan() {
                None
            } else {
                Some(v)
            }
        };
        out.push((k, line, value));
    }
    Ok(out)
}

/// Combines the readings of one row.
pub fn merge_readings(readings: &[f64]) -> Option<f64> {
    match readings {
        [] => None,
        [v] => Some(*v),
        vs => Some(vs.iter().sum::<f64>() / vs.len() as f64),
    }
}

pub fn ingest(spec: &IngestSpec) -> Result<SeriesData> {
    if spec.sources.is_empty() {
        return Err(ArtfimaError::InvalidArgument("no input sources".into()));
    }
    if spec.merge == MergeRule::Single && spec.sources.len() != 1 {
        return Err(ArtfimaError::InvalidArgument(format!(
            "merge rule 'single' needs one source, got {}",
            spec.sources.len()
        )));
    }
    let per_source = spec
        .sources
        .iter()
        .map(|s| read_source(s, spec.key.as_deref(), spec.missing_sentinel))
        .collect::<Result<Vec<_>>>()?;

    let mut rows: IndexMap<String, (u64, Vec<f64>)> = IndexMap::new();
    for readings in &per_source {
        for (k, line, v) in readings {
            let entry = rows.entry(k.clone()).or_insert((*line, Vec::new()));
            if let Some(v) = v {
                entry.1.push(*v);
            }
        }
    }
    let mut values = Vec::with_capacity(rows.len());
    let mut dropped = 0usize;
    for (_, (line, readings)) in &rows {
        match merge_readings(readings) {
            Some(v) => values.push(v),
            None if spec.merge == MergeRule::Single => {
                return Err(ArtfimaError::Parse {
                    line: *line,
                    message: "missing reading".into(),
                })
            }
            None => dropped += 1,
        }
    }
    let names: Vec<String> = spec
        .sources
        .iter()
        .map(|s| format!("{}:{}", s.path.display(), s.column))
        .collect();
    let mut meta = SeriesMeta::new(names.join("+"));
    meta.history
        .push(format!("merge {:?} over {} rows", spec.merge, rows.len()));
    if dropped > 0 {
        meta.history
            .push(format!("dropped {dropped} rows with no reading"));
    }
    let series = SeriesData::new(values, meta)?;
    apply_transforms(series, &spec.transforms)
}

/// Applies `transforms` left to right, recording each in the history.
pub fn apply_transforms(mut series: SeriesData, transforms: &[Transform]) -> Result<SeriesData> {
    for t in transforms {
        series = match *t {
            Transform::Log => {
                if let Some(row) = series.values.iter().position(|v| !(*v > 0.0)) {
                    return Err(ArtfimaError::Transform {
                        row,
                        message: format!("log of non-positive value {}", series.values[row]),
                    });
                }
                series.values.iter_mut().for_each(|v| *v = v.ln());
                series.with_step("log")
            }
            Transform::Demean => crate::spectral::demean(&series),
            Transform::Subseries { start, end } => {
                if start >= end || end > series.len() {
                    return Err(ArtfimaError::Transform {
                        row: start.min(series.len()),
                        message: format!("subseries [{start}, {end}) outside 0..{}", series.len()),
                    });
                }
                series.values = series.values[start..end].to_vec();
                series.with_step(format!("subseries[{start}..{end})"))
            }
        };
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn merge_rule() {
        assert_eq!(merge_readings(&[4.0, 6.0]), Some(5.0));
        assert_eq!(merge_readings(&[7.0]), Some(7.0));
        assert_eq!(merge_readings(&[]), None);
    }

    #[test]
    fn log_chain() {
        let s = SeriesData::from_values(vec![1.0, E, E * E]).unwrap();
        let out = apply_transforms(s, &[Transform::Log]).unwrap();
        for (a, b) in out.values.iter().zip([0.0, 1.0, 2.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(out.meta.history.last().unwrap(), "log");
    }

    #[test]
    fn log_rejects_nonpositive() {
        let s = SeriesData::from_values(vec![1.0, 2.0, 0.0]).unwrap();
        match apply_transforms(s, &[Transform::Log]) {
            Err(ArtfimaError::Transform { row, .. }) => assert_eq!(row, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn subseries_bounds() {
        let s = SeriesData::from_values((0..10).map(f64::from).collect()).unwrap();
        let out =
            apply_transforms(s.clone(), &[Transform::Subseries { start: 2, end: 5 }]).unwrap();
        assert_eq!(out.values, vec![2.0, 3.0, 4.0]);
        assert!(apply_transforms(s, &[Transform::Subseries { start: 5, end: 11 }]).is_err());
    }

    #[test]
    fn two_sources_by_key() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        std::fs::write(&a, "time,flux\n1,4\n2,\n3,NA\n4,2\n").unwrap();
        std::fs::write(&b, "time,flux\n1,6\n2,3\n3,-9999\n4,4\n").unwrap();
        let spec = IngestSpec {
            sources: vec![
                Source {
                    path: a,
                    column: "flux".into(),
                },
                Source {
                    path: b,
                    column: "flux".into(),
                },
            ],
            key: Some("time".into()),
            merge: MergeRule::MeanElseMax,
            transforms: vec![],
            missing_sentinel: Some(-9999.0),
        };
        let s = ingest(&spec).unwrap();
        assert_eq!(s.values, vec![5.0, 3.0, 3.0]);
        assert!(s.meta.history.iter().any(|h| h.contains("dropped 1")));
    }

    #[test]
    fn malformed_csv_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        std::fs::write(&a, "x,y\n1,2\n3\n").unwrap();
        match ingest(&IngestSpec::single(&a, "x")) {
            Err(ArtfimaError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
