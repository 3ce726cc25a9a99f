//! CSV and JSON serialization of [`TomographyRecord`].
//!
//! CSV layout: optional `#` comment lines (one of them `# meta: {json}`),
//! then a header `time,c11,c12,c13,c21,c22,c23,c31,c32,c33` and one row per
//! time point. Values are written with 17 significant digits.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{column_name, RecordMeta, Series, TomographyRecord};
use crate::error::{Error, Result};

const META_PREFIX: &str = "# meta: ";
const JSON_FORMAT_TAG: &str = "jc-probe-tomography/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    Csv,
    Json,
}

impl RecordFormat {
    /// `.json` selects JSON; anything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => RecordFormat::Json,
            _ => RecordFormat::Csv,
        }
    }
}

fn columns() -> Vec<String> {
    let mut cols = vec!["time".to_string()];
    for i in 0..3 {
        for k in 0..3 {
            cols.push(column_name(i, k));
        }
    }
    cols
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_csv_string(rec: &TomographyRecord) -> String {
    let meta = serde_json::to_string(&rec.meta).expect("meta serializes");
    let mut out = String::new();
    out.push_str("# jc-probe tomography record\n");
    out.push_str(META_PREFIX);
    out.push_str(&meta);
    out.push('\n');
    out.push_str(&columns().join(","));
    out.push('\n');
    for j in 0..rec.len() {
        out.push_str(&fmt_f64(rec.times[j]));
        for i in 0..3 {
            for k in 0..3 {
                out.push(',');
                out.push_str(&fmt_f64(rec.series[i][k][j]));
            }
        }
        out.push('\n');
    }
    out
}

pub fn from_csv_str(text: &str) -> Result<TomographyRecord> {
    let mut meta = RecordMeta::default();
    let mut body_start = 0;
    let mut skipped = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim_end();
        if !(trimmed.starts_with('#') || trimmed.is_empty()) {
            break;
        }
        skipped += 1;
        if let Some(json) = trimmed.strip_prefix(META_PREFIX) {
            meta = serde_json::from_str(json)
                .map_err(|e| Error::Parse { line: skipped, message: format!("invalid meta comment: {e}") })?;
        }
        body_start += line.len();
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(&text.as_bytes()[body_start..]);
    let header_line = skipped + 1;
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse { line: header_line, message: format!("unreadable header: {e}") })?;
    let expected = columns();
    let mut index = Vec::with_capacity(expected.len());
    let mut missing = Vec::new();
    for name in &expected {
        match headers.iter().position(|h| h == name) {
            Some(p) => index.push(p),
            None => missing.push(name.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Parse {
            line: header_line,
            message: format!("missing columns: {}", missing.join(", ")),
        });
    }

    let mut times = Vec::new();
    let mut series: Series = Default::default();
    for row in reader.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(header_line, |p| skipped + p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| skipped + p.line() as usize);
        if row.iter().all(str::is_empty) {
            continue;
        }
        let absent: Vec<&str> = expected
            .iter()
            .zip(&index)
            .filter(|(_, &p)| row.get(p).is_none_or(str::is_empty))
            .map(|(name, _)| name.as_str())
            .collect();
        if !absent.is_empty() {
            return Err(Error::Parse {
                line,
                message: format!("row has {} fields; missing columns: {}", row.len(), absent.join(", ")),
            });
        }
        let mut values = [0.0; 10];
        for (c, (&p, name)) in index.iter().zip(&expected).enumerate() {
            let field = &row[p];
            values[c] = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("column {name}: invalid number {field:?}"),
            })?;
        }
        times.push(values[0]);
        for i in 0..3 {
            for k in 0..3 {
                series[i][k].push(values[1 + 3 * i + k]);
            }
        }
    }
    if times.is_empty() {
        return Err(Error::Schema("record has no data rows".into()));
    }
    TomographyRecord::new(times, series, meta)
}

#[derive(Serialize, Deserialize)]
struct JsonRecord {
    format: String,
    times: Vec<f64>,
    series: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    meta: RecordMeta,
}

pub fn to_json_string(rec: &TomographyRecord) -> String {
    let mut series = BTreeMap::new();
    for i in 0..3 {
        for k in 0..3 {
            series.insert(column_name(i, k), rec.series[i][k].clone());
        }
    }
    let doc = JsonRecord {
        format: JSON_FORMAT_TAG.into(),
        times: rec.times.clone(),
        series,
        meta: rec.meta.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("record serializes")
}

pub fn from_json_str(text: &str) -> Result<TomographyRecord> {
    let mut doc: JsonRecord =
        serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })?;
    if doc.format != JSON_FORMAT_TAG {
        return Err(Error::Schema(format!("unsupported record format {:?}", doc.format)));
    }
    let mut series: Series = Default::default();
    let mut missing = Vec::new();
    for (i, row) in series.iter_mut().enumerate() {
        for (k, slot) in row.iter_mut().enumerate() {
            match doc.series.remove(&column_name(i, k)) {
                Some(s) => *slot = s,
                None => missing.push(column_name(i, k)),
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::Schema(format!("missing series: {}", missing.join(", "))));
    }
    TomographyRecord::new(doc.times, series, doc.meta)
}

pub fn write_record(rec: &TomographyRecord, path: &Path, format: RecordFormat) -> Result<()> {
    let text = match format {
        RecordFormat::Csv => to_csv_string(rec),
        RecordFormat::Json => to_json_string(rec),
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a record, choosing the format from the extension or, failing that,
/// from the first non-blank character.
pub fn read_record(path: &Path) -> Result<TomographyRecord> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let json = RecordFormat::from_path(path) == RecordFormat::Json || text.trim_start().starts_with('{');
    if json {
        from_json_str(&text)
    } else {
        from_csv_str(&text)
    }
}
