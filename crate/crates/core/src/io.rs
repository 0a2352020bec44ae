//! Panel CSV input, JSON result files, and atomic output.

use std::f64::consts::TAU;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::estimator::FitResult;
use crate::grid::make_grid;
use crate::inference::{ConfidenceIntervals, Interval};
use crate::panel::{CoeffEntry, CurvePanel};
use crate::{Error, Result};

/// Tolerance for a supplied `t` column against the implied grid.
pub const GRID_TOL: f64 = 1e-9;

pub fn read_panel(path: &Path) -> Result<CurvePanel> {
    parse_panel(fs::File::open(path)?)
}

/// Parses a panel: a header row, an optional leading `t` column, then one
/// column per curve.
pub fn parse_panel<R: Read>(input: R) -> Result<CurvePanel> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| csv_error(e, 1))?
        .iter()
        .map(str::to_owned)
        .collect::<Vec<_>>();
    let has_t = headers.first().is_some_and(|h| h.eq_ignore_ascii_case("t"));
    let first = usize::from(has_t);
    let j = headers.len().saturating_sub(first);
    if j == 0 {
        return Err(Error::ParseError {
            line: 1,
            column: 1,
            message: "no curve columns".into(),
        });
    }

    let mut t = Vec::new();
    let mut rows = vec![Vec::new(); j];
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(e, k + 2))?;
        let line = record.position().map_or(k + 2, |p| p.line() as usize);
        if record.len() != headers.len() {
            return Err(Error::RaggedColumns(format!(
                "line {line} has {} fields, header has {}",
                record.len(),
                headers.len()
            )));
        }
        for (c, field) in record.iter().enumerate() {
            let value = parse_cell(field, line, c + 1)?;
            if c < first {
                t.push(value);
            } else {
                rows[c - first].push(value);
            }
        }
    }

    let n = rows[0].len();
    if n % 2 == 0 {
        return Err(Error::GridMismatch("n must be odd".into()));
    }
    let grid = make_grid(n).map_err(|e| Error::GridMismatch(e.to_string()))?;
    if has_t {
        for (i, (given, expected)) in t.iter().zip(grid.points()).enumerate() {
            if (given - expected).abs() > GRID_TOL {
                return Err(Error::GridMismatch(format!(
                    "t on line {} is {given}, expected {expected} (2π·{i}/{n})",
                    i + 2
                )));
            }
        }
    }
    let labels = headers[first..].to_vec();
    CurvePanel::new(grid, rows, Some(labels))
}

fn parse_cell(field: &str, line: usize, column: usize) -> Result<f64> {
    let err = |message: String| Error::ParseError {
        line,
        column,
        message,
    };
    if field.is_empty() {
        return Err(err("missing value".into()));
    }
    let v: f64 = field
        .parse()
        .map_err(|_| err(format!("'{field}' is not a number")))?;
    if !v.is_finite() {
        return Err(err(format!("'{field}' is not finite")));
    }
    Ok(v)
}

fn csv_error(e: csv::Error, fallback_line: usize) -> Error {
    let line = e
        .position()
        .map_or(fallback_line, |p| p.line() as usize);
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(std::io::Error::other(e.to_string())),
        _ => Error::ParseError {
            line,
            column: 0,
            message: e.to_string(),
        },
    }
}

/// Writes a panel as CSV with a `t` column.
pub fn panel_to_csv(panel: &CurvePanel) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_owned()];
    header.extend(panel.labels().iter().cloned());
    w.write_record(&header).map_err(to_io)?;
    for (i, t) in panel.grid().points().iter().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(panel.rows().iter().map(|r| r[i].to_string()));
        w.write_record(&rec).map_err(to_io)?;
    }
    w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

fn to_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Writes to a sibling temporary file, then renames over `path`, so readers
/// never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(std::io::Error::other("output path has no file name")))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// Covariance of the free coordinates, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceTable {
    pub labels: Vec<String>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiTable {
    pub level: f64,
    pub z: f64,
    pub degenerate: bool,
    pub intervals: Vec<Interval>,
}

impl From<&ConfidenceIntervals> for CiTable {
    fn from(ci: &ConfidenceIntervals) -> Self {
        Self {
            level: ci.level,
            z: ci.z,
            degenerate: ci.degenerate,
            intervals: ci.intervals.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub objective: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub converged: bool,
    pub zero_noise: bool,
    pub amplitude_tie: bool,
    pub regime: String,
    pub n: usize,
    pub curves: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    /// Shifts converted to days for a period of `period_days`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub period_days: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta_days: Option<Vec<f64>>,
}

/// Output of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub theta: Vec<f64>,
    pub a: Vec<f64>,
    pub upsilon: Vec<f64>,
    pub sigma: f64,
    pub m: usize,
    pub shape_coeffs: Vec<CoeffEntry>,
    pub covariance: Option<CovarianceTable>,
    pub ci: Option<CiTable>,
    pub diagnostics: Diagnostics,
}

impl ResultFile {
    pub fn new(
        fit: &FitResult,
        labels: &[String],
        covariance: Option<CovarianceTable>,
        ci: Option<CiTable>,
        seed: Option<u64>,
        period_days: Option<f64>,
    ) -> Self {
        let beta = &fit.beta_hat;
        Self {
            theta: beta.theta().to_vec(),
            a: beta.a().to_vec(),
            upsilon: beta.upsilon().to_vec(),
            sigma: fit.sigma_hat,
            m: fit.m,
            shape_coeffs: fit.shape_hat.entries(),
            covariance,
            ci,
            diagnostics: Diagnostics {
                objective: fit.objective,
                iterations: fit.iterations,
                restarts: fit.restarts,
                converged: fit.converged,
                zero_noise: fit.zero_noise,
                amplitude_tie: fit.amplitude_tie,
                regime: fit.regime().kind.to_string(),
                n: fit.n,
                curves: labels.to_vec(),
                seed,
                period_days,
                theta_days: period_days.map(|p| beta.theta().iter().map(|t| t * p / TAU).collect()),
            },
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// `t, f_hat` at `points` equispaced locations on `[0, 2π)`.
pub fn shape_table(shape: &crate::panel::ShapeSpectrum, points: usize) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "f_hat"]).map_err(to_io)?;
    for k in 0..points {
        let t = TAU * k as f64 / points as f64;
        w.write_record([t.to_string(), shape.eval(t).to_string()])
            .map_err(to_io)?;
    }
    w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}
