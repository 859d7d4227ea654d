//! CSV dataset files.
//!
//! Dialect: comma-separated, UTF-8, one mandatory header row, `.` as decimal
//! separator, no missing cells. Features and labels are selected by column
//! name. Classification labels are non-negative integers; regression labels
//! are reals (several label columns give a vector-valued target).

use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Domain, LabeledDataset, Labels, Task};
use crate::error::{Error, Result};

/// Which columns hold what.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub task: Task,
    /// Feature column names; `None` means every non-label column, in file order.
    #[serde(default)]
    pub feature_columns: Option<Vec<String>>,
    #[serde(default = "default_label_columns")]
    pub label_columns: Vec<String>,
    /// Declared class count; inferred as `max label + 1` when absent.
    #[serde(default)]
    pub n_classes: Option<usize>,
    /// When false, a file without the label columns loads as unlabeled.
    #[serde(default = "yes")]
    pub require_labels: bool,
}

fn default_label_columns() -> Vec<String> {
    vec!["label".to_owned()]
}

fn yes() -> bool {
    true
}

impl CsvSchema {
    pub fn new(task: Task) -> Self {
        Self {
            task,
            feature_columns: None,
            label_columns: default_label_columns(),
            n_classes: None,
            require_labels: true,
        }
    }

    pub fn labels_optional(mut self) -> Self {
        self.require_labels = false;
        self
    }
}

/// JSON descriptor pointing at a CSV file plus its schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDescriptor {
    pub path: PathBuf,
    #[serde(flatten)]
    pub schema: CsvSchema,
}

impl DatasetDescriptor {
    /// Relative paths are resolved against `base` (the descriptor's directory).
    pub fn load(&self, base: &Path, domain: Domain) -> Result<LabeledDataset> {
        let path = if self.path.is_absolute() {
            self.path.clone()
        } else {
            base.join(&self.path)
        };
        load_csv(&path, &self.schema, domain)
    }
}

pub fn load_descriptor(path: &Path) -> Result<DatasetDescriptor> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn load_csv(path: &Path, schema: &CsvSchema, domain: Domain) -> Result<LabeledDataset> {
    let display = path.display().to_string();
    let csv_err = |line: u64, column: &str, message: String| Error::Csv {
        path: display.clone(),
        line,
        column: column.to_owned(),
        message,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| from_csv_error(&display, e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| from_csv_error(&display, e))?
        .iter()
        .map(|h| h.trim().to_owned())
        .collect();
    let position = |name: &str| headers.iter().position(|h| h == name);

    let label_idx: Vec<Option<usize>> = schema.label_columns.iter().map(|c| position(c)).collect();
    let have_labels = !label_idx.is_empty() && label_idx.iter().all(Option::is_some);
    if !have_labels && (schema.require_labels || label_idx.iter().any(Option::is_some)) {
        let missing: Vec<&str> = schema
            .label_columns
            .iter()
            .zip(&label_idx)
            .filter(|(_, i)| i.is_none())
            .map(|(c, _)| c.as_str())
            .collect();
        return Err(Error::Schema(format!("{display}: missing label column(s) {missing:?}")));
    }
    if schema.task == Task::Classification && schema.label_columns.len() != 1 {
        return Err(Error::Schema("classification needs exactly one label column".into()));
    }
    let label_idx: Vec<usize> = if have_labels {
        label_idx.into_iter().flatten().collect()
    } else {
        Vec::new()
    };

    let feature_idx: Vec<usize> = match &schema.feature_columns {
        Some(cols) => cols
            .iter()
            .map(|c| position(c).ok_or_else(|| Error::Schema(format!("{display}: missing feature column '{c}'"))))
            .collect::<Result<_>>()?,
        None => (0..headers.len())
            .filter(|i| !schema.label_columns.contains(&headers[*i]))
            .collect(),
    };
    if feature_idx.is_empty() {
        return Err(Error::Schema(format!("{display}: no feature columns")));
    }

    let mut features = Vec::new();
    let mut label_values = Vec::new();
    let mut n_rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| from_csv_error(&display, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = |idx: usize| -> Result<&str> {
            record
                .get(idx)
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| csv_err(line, &headers[idx], "missing cell".into()))
        };
        for &idx in &feature_idx {
            let raw = cell(idx)?;
            let v: f64 = raw
                .parse()
                .map_err(|_| csv_err(line, &headers[idx], format!("non-numeric value '{raw}'")))?;
            if !v.is_finite() {
                return Err(csv_err(line, &headers[idx], format!("non-finite value '{raw}'")));
            }
            features.push(v);
        }
        for &idx in &label_idx {
            let raw = cell(idx)?;
            let v = match schema.task {
                Task::Classification => {
                    let k: usize = raw.parse().map_err(|_| {
                        csv_err(
                            line,
                            &headers[idx],
                            format!("class label '{raw}' is not a non-negative integer"),
                        )
                    })?;
                    if let Some(kmax) = schema.n_classes {
                        if k >= kmax {
                            return Err(csv_err(
                                line,
                                &headers[idx],
                                format!("class label {k} out of range for {kmax} classes"),
                            ));
                        }
                    }
                    k as f64
                }
                Task::Regression => {
                    let v: f64 = raw
                        .parse()
                        .map_err(|_| csv_err(line, &headers[idx], format!("non-numeric value '{raw}'")))?;
                    if !v.is_finite() {
                        return Err(csv_err(line, &headers[idx], format!("non-finite value '{raw}'")));
                    }
                    v
                }
            };
            label_values.push(v);
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(Error::Schema(format!("{display}: no data rows")));
    }

    let x = Array2::from_shape_vec((n_rows, feature_idx.len()), features).expect("row-major fill");
    let labels = if label_idx.is_empty() {
        None
    } else {
        Some(match schema.task {
            Task::Classification => {
                let indices: Vec<usize> = label_values.iter().map(|&v| v as usize).collect();
                let n_classes = schema
                    .n_classes
                    .unwrap_or_else(|| indices.iter().max().map_or(1, |m| m + 1));
                Labels::Classes { indices, n_classes }
            }
            Task::Regression => {
                Labels::Values(Array2::from_shape_vec((n_rows, label_idx.len()), label_values).expect("row-major fill"))
            }
        })
    };
    LabeledDataset::new(x, labels, domain)
}

fn from_csv_error(path: &str, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Csv {
        path: path.to_owned(),
        line,
        column: String::new(),
        message: e.to_string(),
    }
}

/// Label column names written by [`save_csv`].
pub fn label_column_names(labels: &Labels) -> Vec<String> {
    match labels {
        Labels::Values(y) if y.ncols() > 1 => (0..y.ncols()).map(|k| format!("label{k}")).collect(),
        _ => default_label_columns(),
    }
}

/// Write features as `x0..x{d-1}` followed by the label column(s).
///
/// Floats use Rust's shortest round-trip formatting, so loading the file back
/// reproduces every value bit for bit.
pub fn save_csv(ds: &LabeledDataset, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| from_csv_error(&path.display().to_string(), e))?;
    let mut header: Vec<String> = (0..ds.n_features()).map(|k| format!("x{k}")).collect();
    if let Some(labels) = ds.labels() {
        header.extend(label_column_names(labels));
    }
    let io = |e: csv::Error| from_csv_error(&path.display().to_string(), e);
    writer.write_record(&header).map_err(io)?;
    for i in 0..ds.len() {
        let mut row: Vec<String> = ds.x().row(i).iter().map(|v| v.to_string()).collect();
        match ds.labels() {
            Some(Labels::Classes { indices, .. }) => row.push(indices[i].to_string()),
            Some(Labels::Values(y)) => row.extend(y.row(i).iter().map(|v| v.to_string())),
            None => {}
        }
        writer.write_record(&row).map_err(io)?;
    }
    writer.flush()?;
    Ok(())
}
