//! CSV and JSON formats for datasets, estimates, and run configuration.
//!
//! Schemas (header row mandatory, UTF-8, LF line endings on output):
//! * 1-D data: `x,y` with an optional third column `weight` (positive
//!   reals) or `trials` (positive integers, for binomial responses);
//! * 2-D data: `x1,x2,y[,trials]`; 3-D data: `x1,x2,x3,y[,trials]`;
//! * projection inputs additionally accept `value` for the response column;
//! * estimates: `x[,x2[,x3]],mean,lo,hi`;
//! * benchmark tables: `truth,method,replicates,failed,rmse_mean,rmse_se`.
//!
//! Floats are serialized with 17 significant digits, so a written file
//! parses back to bit-identical values. Parse errors carry 1-based line
//! numbers.

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inference::FitSummary;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("no data rows")]
    Empty,
    #[error("header error: {0}")]
    Header(String),
    #[error("line {line}: {msg}")]
    Row { line: u64, msg: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("config error: {0}")]
    Config(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A parsed dataset: covariate rows, responses, and optional per-point
/// weights or binomial trial counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub xs: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub weights: Option<Vec<f64>>,
    pub trials: Option<Vec<u32>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.xs.first().map_or(0, Vec::len)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum ExtraColumn {
    None,
    Weight,
    Trials,
}

struct Layout {
    dim: usize,
    extra: ExtraColumn,
}

fn parse_header(headers: &csv::StringRecord) -> Result<Layout, DataError> {
    let cols: Vec<String> = headers
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    let names: Vec<&str> = cols.iter().map(String::as_str).collect();
    let (dim, rest) = match names.as_slice() {
        ["x", rest @ ..] => (1, rest),
        ["x1", "x2", "x3", rest @ ..] => (3, rest),
        ["x1", "x2", rest @ ..] => (2, rest),
        _ => {
            return Err(DataError::Header(format!(
                "expected covariate columns `x` or `x1,x2[,x3]`, got `{}`",
                names.join(",")
            )))
        }
    };
    let extra = match rest {
        ["y"] | ["value"] => ExtraColumn::None,
        ["y", "weight"] | ["value", "weight"] => ExtraColumn::Weight,
        ["y", "trials"] | ["value", "trials"] => ExtraColumn::Trials,
        _ => {
            return Err(DataError::Header(format!(
                "expected response columns `y[,weight|trials]`, got `{}`",
                rest.join(",")
            )))
        }
    };
    Ok(Layout { dim, extra })
}

fn field_f64(record: &csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<f64, DataError> {
    let raw = record.get(idx).ok_or(DataError::Row {
        line,
        msg: format!("missing column `{name}`"),
    })?;
    let v: f64 = raw.trim().parse().map_err(|_| DataError::Row {
        line,
        msg: format!("column `{name}`: cannot parse `{raw}` as a number"),
    })?;
    if !v.is_finite() {
        return Err(DataError::Row {
            line,
            msg: format!("column `{name}`: non-finite value `{raw}`"),
        });
    }
    Ok(v)
}

/// Parses a dataset CSV, inferring the dimension and optional column from
/// the header.
pub fn parse_dataset<R: Read>(reader: R) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true) // column counts checked per row for line-numbered errors
        .from_reader(reader);
    let layout = parse_header(rdr.headers()?)?;
    let mut ds = Dataset {
        xs: Vec::new(),
        y: Vec::new(),
        weights: matches!(layout.extra, ExtraColumn::Weight).then(Vec::new),
        trials: matches!(layout.extra, ExtraColumn::Trials).then(Vec::new),
    };
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let expected = layout.dim + 1 + (layout.extra != ExtraColumn::None) as usize;
        if record.len() != expected {
            return Err(DataError::Row {
                line,
                msg: format!("expected {expected} columns, got {}", record.len()),
            });
        }
        let mut x = Vec::with_capacity(layout.dim);
        for k in 0..layout.dim {
            x.push(field_f64(&record, k, &format!("x{}", k + 1), line)?);
        }
        ds.xs.push(x);
        ds.y.push(field_f64(&record, layout.dim, "y", line)?);
        match layout.extra {
            ExtraColumn::None => {}
            ExtraColumn::Weight => {
                let w = field_f64(&record, layout.dim + 1, "weight", line)?;
                if w <= 0.0 {
                    return Err(DataError::Row {
                        line,
                        msg: format!("column `weight`: must be positive, got {w}"),
                    });
                }
                ds.weights.as_mut().unwrap().push(w);
            }
            ExtraColumn::Trials => {
                let raw = record.get(layout.dim + 1).unwrap_or("");
                let t: u32 = raw.trim().parse().map_err(|_| DataError::Row {
                    line,
                    msg: format!("column `trials`: cannot parse `{raw}` as a positive integer"),
                })?;
                if t == 0 {
                    return Err(DataError::Row {
                        line,
                        msg: "column `trials`: must be at least 1".into(),
                    });
                }
                ds.trials.as_mut().unwrap().push(t);
            }
        }
    }
    if ds.is_empty() {
        return Err(DataError::Empty);
    }
    Ok(ds)
}

/// 17 significant digits: round-trips every f64 exactly.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn x_header(dim: usize) -> String {
    match dim {
        1 => "x".to_string(),
        d => (1..=d)
            .map(|k| format!("x{k}"))
            .collect::<Vec<_>>()
            .join(","),
    }
}

/// Writes a dataset in the schema [`parse_dataset`] reads.
pub fn write_dataset(ds: &Dataset) -> String {
    let dim = ds.dim();
    let mut out = x_header(dim);
    out.push_str(",y");
    if ds.weights.is_some() {
        out.push_str(",weight");
    } else if ds.trials.is_some() {
        out.push_str(",trials");
    }
    out.push('\n');
    for i in 0..ds.len() {
        let mut cols: Vec<String> = ds.xs[i].iter().map(|v| fmt_float(*v)).collect();
        cols.push(fmt_float(ds.y[i]));
        if let Some(w) = &ds.weights {
            cols.push(fmt_float(w[i]));
        } else if let Some(t) = &ds.trials {
            cols.push(t[i].to_string());
        }
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

/// Writes an estimate table: evaluation point, posterior mean, band bounds.
pub fn write_estimate(summary: &FitSummary) -> String {
    let dim = summary.grid.first().map_or(1, Vec::len);
    let mut out = x_header(dim);
    out.push_str(",mean,lo,hi\n");
    for i in 0..summary.posterior_mean.len() {
        let mut cols: Vec<String> = summary.grid[i].iter().map(|v| fmt_float(*v)).collect();
        cols.push(fmt_float(summary.posterior_mean[i]));
        cols.push(fmt_float(summary.band_lower[i]));
        cols.push(fmt_float(summary.band_upper[i]));
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

/// Writes projected values against their evaluation points
/// (`x[,...],value[,weight]`).
pub fn write_projected(
    xs: &[Vec<f64>],
    values: &[f64],
    weights: Option<&[f64]>,
) -> String {
    let dim = xs.first().map_or(1, Vec::len);
    let mut out = x_header(dim);
    out.push_str(",value");
    if weights.is_some() {
        out.push_str(",weight");
    }
    out.push('\n');
    for i in 0..values.len() {
        let mut cols: Vec<String> = xs[i].iter().map(|v| fmt_float(*v)).collect();
        cols.push(fmt_float(values[i]));
        if let Some(w) = weights {
            cols.push(fmt_float(w[i]));
        }
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

/// JSON run configuration; any field may be omitted and command-line flags
/// take precedence. Unknown fields are rejected to catch typos.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub model: Option<String>,
    pub dim: Option<usize>,
    pub iters: Option<usize>,
    pub burnin: Option<usize>,
    pub seed: Option<u64>,
    pub level: Option<f64>,
    pub replicates: Option<usize>,
    pub jobs: Option<usize>,
    pub n: Option<usize>,
    pub sigma: Option<f64>,
    pub truth: Option<String>,
    pub design: Option<String>,
    pub m1: Option<usize>,
    pub m2: Option<usize>,
    pub tol_mono: Option<f64>,
    pub max_proj_iter: Option<usize>,
    pub step_beta: Option<f64>,
    pub step_gamma: Option<f64>,
    pub step_sigma: Option<f64>,
    pub adapt: Option<bool>,
    pub beta_shape: Option<f64>,
    pub beta_rate: Option<f64>,
    pub gamma_shape: Option<f64>,
    pub gamma_rate: Option<f64>,
    pub precision_shape: Option<f64>,
    pub precision_rate: Option<f64>,
}

pub fn parse_config(text: &str) -> Result<FileConfig, DataError> {
    Ok(serde_json::from_str(text)?)
}
