//! CSV datasets, model files and β export.
//!
//! Reals are written with 17 significant digits in CSV output. Model files are
//! TOML; their floats use the shortest representation that parses back to the
//! identical `f64`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::LinearModelState;
use crate::linalg::Matrix;
use crate::model::{CurveDataset, FittedModel};
use crate::penalized::Estimator;
use crate::reduce::{ReducedBasis, ReductionKind};
use crate::wavelet::WaveletFamily;

/// Version written to and required from model files.
pub const MODEL_FORMAT_VERSION: i64 = 1;

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: display(path),
        msg: e.to_string(),
    }
}

fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| io_error(path, "not a file path"))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(io_error(path, e));
    }
    Ok(())
}

/// Reads a `label,t1,...,td` CSV file.
pub fn load_dataset(path: &Path) -> Result<CurveDataset<f64>> {
    let file = fs::File::open(path).map_err(|e| io_error(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let parse = |line: u64, msg: String| Error::Parse {
        path: display(path),
        line: line as usize,
        msg,
    };
    let header = reader
        .headers()
        .map_err(|e| parse(1, e.to_string()))?
        .clone();
    if header.get(0) != Some("label") {
        return Err(parse(1, "first column must be named 'label'".into()));
    }
    let width = header.len();
    let d = width - 1;
    if d < 2 || !d.is_power_of_two() {
        return Err(parse(
            1,
            format!("curve length d = {d} must be a power of two >= 2"),
        ));
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(parse(
                line,
                format!("expected {width} fields, found {}", record.len()),
            ));
        }
        let label = match &record[0] {
            "0" => 0u8,
            "1" => 1u8,
            other => {
                return Err(parse(
                    line,
                    format!("label must be 0 or 1, found '{other}'"),
                ))
            }
        };
        labels.push(label);
        for (j, cell) in record.iter().enumerate().skip(1) {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse(line, format!("column {}: '{cell}' is not a number", j + 1)))?;
            if !v.is_finite() {
                return Err(parse(
                    line,
                    format!("column {}: non-finite value '{cell}'", j + 1),
                ));
            }
            values.push(v);
        }
    }
    if labels.is_empty() {
        return Err(parse(1, "no observations".into()));
    }
    let curves = Matrix::from_vec(labels.len(), d, values)?;
    CurveDataset::new(curves, labels)
}

pub fn dataset_to_csv(data: &CurveDataset<f64>) -> String {
    let mut out = String::from("label");
    for j in 1..=data.d() {
        out.push_str(&format!(",t{j}"));
    }
    out.push('\n');
    for (row, &y) in data.curves().rows_iter().zip(data.labels()) {
        out.push_str(&y.to_string());
        for &v in row {
            out.push(',');
            out.push_str(&fmt_real(v));
        }
        out.push('\n');
    }
    out
}

pub fn save_dataset(data: &CurveDataset<f64>, path: &Path) -> Result<()> {
    write_atomic(path, dataset_to_csv(data).as_bytes())
}

#[derive(Debug, Serialize, Deserialize)]
struct ReductionRecord {
    kind: String,
    center: Vec<f64>,
    scores_scale: Vec<f64>,
    /// One entry per component, each of length `d`.
    loadings: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelRecord {
    format_version: i64,
    estimator: String,
    wavelet: String,
    j0: usize,
    d: usize,
    lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    q: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    tau: Option<f64>,
    intercept: f64,
    omega: Vec<f64>,
    kkt_residual: f64,
    iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    reduction: Option<ReductionRecord>,
}

pub fn model_to_toml(model: &FittedModel<f64>) -> Result<String> {
    let reduction = model.reduction.as_ref().map(|r| ReductionRecord {
        kind: r.kind().to_string(),
        center: r.center().to_vec(),
        scores_scale: r.scores_scale().to_vec(),
        loadings: (0..r.q()).map(|k| r.loadings().column(k)).collect(),
    });
    let record = ModelRecord {
        format_version: MODEL_FORMAT_VERSION,
        estimator: model.estimator.to_string(),
        wavelet: model.family.to_string(),
        j0: model.j0,
        d: model.d,
        lambda: model.lambda,
        q: model.q,
        tau: model.tau,
        intercept: model.state.intercept,
        omega: model.state.omega.clone(),
        kkt_residual: model.kkt_residual,
        iterations: model.iterations,
        reduction,
    };
    toml::to_string(&record)
        .map_err(|e| Error::InvalidParameter(format!("cannot encode model: {e}")))
}

pub fn model_from_toml(text: &str, path: &Path) -> Result<FittedModel<f64>> {
    let parse = |msg: String| Error::Parse {
        path: display(path),
        line: 0,
        msg,
    };
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| parse(e.to_string()))?;
    match table
        .get("format_version")
        .and_then(toml::Value::as_integer)
    {
        Some(MODEL_FORMAT_VERSION) => {}
        Some(found) => {
            return Err(Error::ModelVersion {
                path: display(path),
                found,
                expected: MODEL_FORMAT_VERSION,
            })
        }
        None => return Err(parse("missing integer field 'format_version'".into())),
    }
    let record: ModelRecord = toml::from_str(text).map_err(|e| parse(e.to_string()))?;
    let field = |name: &str, e: Error| parse(format!("field '{name}': {e}"));
    let estimator: Estimator = record
        .estimator
        .parse()
        .map_err(|e| field("estimator", e))?;
    let family: WaveletFamily = record.wavelet.parse().map_err(|e| field("wavelet", e))?;
    if record.omega.len() != record.d {
        return Err(parse(format!(
            "field 'omega' has {} entries, expected d = {}",
            record.omega.len(),
            record.d
        )));
    }
    let reduction = match record.reduction {
        None => None,
        Some(r) => {
            let kind: ReductionKind = r.kind.parse().map_err(|e| field("reduction.kind", e))?;
            if r.loadings.iter().any(|c| c.len() != record.d) {
                return Err(parse(format!(
                    "reduction loadings must have length d = {}",
                    record.d
                )));
            }
            let loadings = Matrix::from_columns(&r.loadings, record.d)
                .map_err(|e| field("reduction.loadings", e))?;
            Some(
                ReducedBasis::from_parts(loadings, r.scores_scale, kind, r.center)
                    .map_err(|e| field("reduction", e))?,
            )
        }
    };
    let model = FittedModel {
        estimator,
        family,
        j0: record.j0,
        d: record.d,
        lambda: record.lambda,
        q: record.q,
        tau: record.tau,
        state: LinearModelState {
            omega: record.omega,
            intercept: record.intercept,
        },
        reduction,
        kkt_residual: record.kkt_residual,
        iterations: record.iterations,
    };
    model.wavelet().map_err(|e| field("wavelet/j0/d", e))?;
    Ok(model)
}

pub fn save_model(model: &FittedModel<f64>, path: &Path) -> Result<()> {
    write_atomic(path, model_to_toml(model)?.as_bytes())
}

pub fn load_model(path: &Path) -> Result<FittedModel<f64>> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    model_from_toml(&text, path)
}

/// `t,beta` rows with `t_j = (j - 1/2) / d`.
pub fn beta_to_csv(beta: &[f64]) -> String {
    let d = beta.len() as f64;
    let mut out = String::from("t,beta\n");
    for (j, &b) in beta.iter().enumerate() {
        out.push_str(&format!(
            "{},{}\n",
            fmt_real((j as f64 + 0.5) / d),
            fmt_real(b)
        ));
    }
    out
}

pub fn export_beta(model: &FittedModel<f64>, path: &Path) -> Result<()> {
    write_atomic(path, beta_to_csv(&model.beta()?).as_bytes())
}

/// One `probability` per row.
pub fn probabilities_to_csv(p: &[f64]) -> String {
    let mut out = String::from("probability\n");
    for &v in p {
        out.push_str(&fmt_real(v));
        out.push('\n');
    }
    out
}
