//! Dataset files.
//!
//! CSV files carry the header `cum_pop_share,cum_income_share` and one row
//! per Lorenz ordinate; the rows `(0, 0)` and `(1, 1)` may be included and
//! are dropped. Metadata for `name.csv` lives in an optional `name.meta.json`
//! holding any of `id`, `mean`, `poverty_line` and `reference`.
//!
//! JSON files hold the same fields plus `points: [{"u": .., "s": ..}, ..]`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use lorenz_core::estimation::{DataError, GroupedDataset};
use lorenz_core::measures::MeasureKind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CSV_HEADER: [&str; 2] = ["cum_pop_share", "cum_income_share"];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}, line {line}: {msg}")]
    Parse { path: PathBuf, line: u64, msg: String },
    #[error("{path}: {source}")]
    Invalid {
        path: PathBuf,
        #[source]
        source: DataError,
    },
    #[error("{0}: unsupported extension (expected .csv or .json)")]
    Extension(PathBuf),
}

/// Published measure values the fitted ones are compared against.
pub type Reference = BTreeMap<MeasureKind, f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub data: GroupedDataset,
    pub reference: Reference,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Meta {
    id: Option<String>,
    mean: Option<f64>,
    poverty_line: Option<f64>,
    #[serde(default)]
    reference: Reference,
}

#[derive(Debug, Serialize, Deserialize)]
struct Point {
    u: f64,
    s: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonDataset {
    id: Option<String>,
    mean: Option<f64>,
    poverty_line: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    reference: Reference,
    points: Vec<Point>,
}

fn read(path: &Path) -> Result<String, DatasetError> {
    fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Sidecar path of a CSV dataset.
pub fn meta_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

fn is_endpoint(u: f64, s: f64) -> bool {
    (u == 0.0 && s == 0.0) || (u == 1.0 && s == 1.0)
}

fn build(
    path: &Path,
    id: Option<String>,
    points: Vec<(f64, f64)>,
    mean: Option<f64>,
    poverty_line: Option<f64>,
    reference: Reference,
) -> Result<DatasetFile, DatasetError> {
    let (u, s): (Vec<f64>, Vec<f64>) = points.into_iter().filter(|&(u, s)| !is_endpoint(u, s)).unzip();
    let data = GroupedDataset::new(id.unwrap_or_else(|| stem(path)), u, s, mean, poverty_line).map_err(|source| {
        DatasetError::Invalid {
            path: path.to_path_buf(),
            source,
        }
    })?;
    Ok(DatasetFile {
        data,
        reference,
        path: Some(path.to_path_buf()),
    })
}

/// Reads and validates a dataset; the format follows the extension.
pub fn parse_dataset(path: &Path) -> Result<DatasetFile, DatasetError> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("csv") => parse_csv(path),
        Some("json") => parse_json(path),
        _ => Err(DatasetError::Extension(path.to_path_buf())),
    }
}

fn parse_csv(path: &Path) -> Result<DatasetFile, DatasetError> {
    let text = read(path)?;
    let parse_err = |line: u64, msg: String| DatasetError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| parse_err(1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(parse_err(1, format!("expected header `{}`", CSV_HEADER.join(","))));
    }
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| -> Result<f64, DatasetError> {
            let raw = &record[i];
            raw.parse::<f64>()
                .map_err(|_| parse_err(line, format!("{}: `{raw}` is not a number", CSV_HEADER[i])))
        };
        points.push((field(0)?, field(1)?));
    }

    let sidecar = meta_path(path);
    let meta = if sidecar.exists() {
        serde_json::from_str::<Meta>(&read(&sidecar)?).map_err(|e| DatasetError::Parse {
            path: sidecar.clone(),
            line: e.line() as u64,
            msg: e.to_string(),
        })?
    } else {
        Meta::default()
    };
    build(path, meta.id, points, meta.mean, meta.poverty_line, meta.reference)
}

fn parse_json(path: &Path) -> Result<DatasetFile, DatasetError> {
    let doc: JsonDataset = serde_json::from_str(&read(path)?).map_err(|e| DatasetError::Parse {
        path: path.to_path_buf(),
        line: e.line() as u64,
        msg: e.to_string(),
    })?;
    let points = doc.points.into_iter().map(|p| (p.u, p.s)).collect();
    build(path, doc.id, points, doc.mean, doc.poverty_line, doc.reference)
}

/// CSV text of a dataset. Floats are written in shortest round-trip form,
/// so parsing the output gives back the same values.
pub fn to_csv(data: &GroupedDataset) -> String {
    let mut out = CSV_HEADER.join(",");
    out.push('\n');
    for (u, s) in data.u.iter().zip(&data.s) {
        out.push_str(&format!("{u:?},{s:?}\n"));
    }
    out
}

/// JSON text of a dataset file.
pub fn to_json(file: &DatasetFile) -> String {
    let doc = JsonDataset {
        id: Some(file.data.id.clone()),
        mean: file.data.mean,
        poverty_line: file.data.poverty_line,
        reference: file.reference.clone(),
        points: file
            .data
            .u
            .iter()
            .zip(&file.data.s)
            .map(|(&u, &s)| Point { u, s })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("datasets serialize")
}

/// Sidecar JSON for a CSV dataset.
pub fn meta_json(file: &DatasetFile) -> String {
    let meta = Meta {
        id: Some(file.data.id.clone()),
        mean: file.data.mean,
        poverty_line: file.data.poverty_line,
        reference: file.reference.clone(),
    };
    serde_json::to_string_pretty(&meta).expect("metadata serializes")
}

/// Dataset files directly inside `dir`, sorted by name. Sidecars are skipped.
pub fn list_datasets(dir: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let entries = fs::read_dir(dir).map_err(|source| DatasetError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|source| DatasetError::Io {
                path: dir.to_path_buf(),
                source,
            })?
            .path();
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().to_ascii_lowercase())
            .unwrap_or_default();
        if !path.is_file() || name.ends_with(".meta.json") {
            continue;
        }
        if name.ends_with(".csv") || name.ends_with(".json") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}
