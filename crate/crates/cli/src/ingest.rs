//! CSV ingestion.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use thiserror::Error;
use vscc_core::{Dataset, KnownLabels, Partition};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Line and column are 1-based; line 1 is the header.
    #[error("parse error at line {line}, column {col}: {message}")]
    ParseError {
        line: usize,
        col: usize,
        message: String,
    },

    #[error("column {0:?} contains non-numeric values")]
    NonNumericColumn(String),

    #[error("no column named {0:?}")]
    UnknownColumn(String),

    #[error(transparent)]
    Data(#[from] vscc_core::Error),
}

/// A categorical column. Blank cells are unknown.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelColumn {
    pub name: String,
    /// Distinct non-blank values in order of first appearance.
    pub levels: Vec<String>,
    /// 1-based position in `levels` per row.
    pub codes: Vec<Option<usize>>,
}

impl LabelColumn {
    fn from_cells(name: &str, cells: Vec<String>) -> Self {
        let mut levels: Vec<String> = Vec::new();
        let mut lookup: HashMap<String, usize> = HashMap::new();
        let codes = cells
            .into_iter()
            .map(|c| {
                let c = c.trim();
                if c.is_empty() {
                    return None;
                }
                let next = levels.len() + 1;
                let code = *lookup.entry(c.to_string()).or_insert(next);
                if code == next {
                    levels.push(c.to_string());
                }
                Some(code)
            })
            .collect();
        LabelColumn {
            name: name.to_string(),
            levels,
            codes,
        }
    }

    pub fn n_known(&self) -> usize {
        self.codes.iter().flatten().count()
    }

    pub fn known_labels(&self) -> Result<KnownLabels, vscc_core::Error> {
        KnownLabels::new(self.codes.clone(), self.levels.len())
    }

    /// The labels as a partition, if no cell is blank.
    pub fn partition(&self) -> Option<Partition> {
        let labels: Option<Vec<usize>> = self.codes.iter().copied().collect();
        Partition::new(labels?, self.levels.len()).ok()
    }
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub dataset: Dataset,
    /// One entry per requested label column, in request order.
    pub labels: Vec<LabelColumn>,
}

/// Reads a comma-separated file with a header row. Columns named in
/// `label_cols` are kept as categorical labels; every other column must be
/// numeric.
pub fn ingest_csv(path: &Path, label_cols: &[&str]) -> Result<Ingested, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ingest_reader(file, label_cols)
}

pub fn ingest_reader<R: std::io::Read>(reader: R, label_cols: &[&str]) -> Result<Ingested, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(e, 1))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.iter().all(|h| h.is_empty()) {
        return Err(IngestError::ParseError {
            line: 1,
            col: 1,
            message: "missing header row".into(),
        });
    }
    let mut label_pos = Vec::with_capacity(label_cols.len());
    for name in label_cols {
        let pos = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::UnknownColumn(name.to_string()))?;
        label_pos.push(pos);
    }
    let numeric: Vec<usize> = (0..headers.len()).filter(|j| !label_pos.contains(j)).collect();

    let mut values: Vec<f64> = Vec::new();
    let mut label_cells: Vec<Vec<String>> = vec![Vec::new(); label_pos.len()];
    let mut n = 0;
    for record in rdr.records() {
        let line = n + 2;
        let record = record.map_err(|e| csv_error(e, line))?;
        for &j in &numeric {
            let cell = record[j].trim();
            if cell.is_empty() {
                return Err(IngestError::ParseError {
                    line: record_line(&record, line),
                    col: j + 1,
                    message: format!("missing value in column {:?}", headers[j]),
                });
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| IngestError::NonNumericColumn(headers[j].clone()))?;
            values.push(v);
        }
        for (k, &j) in label_pos.iter().enumerate() {
            label_cells[k].push(record[j].to_string());
        }
        n += 1;
    }
    let names: Vec<String> = numeric.iter().map(|&j| headers[j].clone()).collect();
    let matrix = DMatrix::from_row_slice(n, names.len(), &values);
    let dataset = Dataset::new(matrix, names)?;
    let labels = label_cells
        .into_iter()
        .zip(label_cols)
        .map(|(cells, name)| LabelColumn::from_cells(name, cells))
        .collect();
    Ok(Ingested { dataset, labels })
}

fn record_line(record: &csv::StringRecord, fallback: usize) -> usize {
    record
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or(fallback)
}

fn csv_error(e: csv::Error, fallback_line: usize) -> IngestError {
    let (line, col, message) = match e.kind() {
        csv::ErrorKind::UnequalLengths { pos, expected_len, len } => (
            pos.as_ref().map(|p| p.line() as usize).unwrap_or(fallback_line),
            (*len.min(expected_len) + 1) as usize,
            format!("expected {expected_len} fields, found {len}"),
        ),
        csv::ErrorKind::Utf8 { pos, err } => (
            pos.as_ref().map(|p| p.line() as usize).unwrap_or(fallback_line),
            err.field() + 1,
            "invalid UTF-8".to_string(),
        ),
        csv::ErrorKind::Io(err) => (fallback_line, 1, err.to_string()),
        other => (fallback_line, 1, format!("{other:?}")),
    };
    IngestError::ParseError { line, col, message }
}
