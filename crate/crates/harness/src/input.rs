//! Loading spaces from files, chosen by extension.

use std::path::{Path, PathBuf};

use ghrelax::metric::{parse_distance_csv, parse_point_cloud};
use ghrelax::{FiniteMetricSpace, MetricError};
use thiserror::Error;

/// Relative tolerance of the metric check on distance matrices.
pub const VALIDATION_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Metric { path: PathBuf, source: MetricError },
    #[error("{0}: unsupported extension (expected .csv for distance matrices or .pts/.xyz/.txt for point clouds)")]
    Extension(PathBuf),
    #[error("{0}")]
    Invalid(String),
}

pub fn read_text(path: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|source| InputError::Io { path: path.to_owned(), source })
}

/// `.csv` is a distance matrix, `.pts`, `.xyz` and `.txt` are point clouds.
/// With `validate = false` the triangle inequality of a matrix is not checked.
pub fn load_space(path: &Path, validate: bool) -> Result<FiniteMetricSpace, InputError> {
    let text = read_text(path)?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let wrap = |source| InputError::Metric { path: path.to_owned(), source };
    match ext.as_str() {
        "csv" => parse_distance_csv(&text, validate.then_some(VALIDATION_TOL)).map_err(wrap),
        "pts" | "xyz" | "txt" => parse_point_cloud(&text).and_then(|p| FiniteMetricSpace::from_point_cloud(&p)).map_err(wrap),
        _ => Err(InputError::Extension(path.to_owned())),
    }
}

/// Every loadable file of a directory, sorted by name.
pub fn load_dir(dir: &Path, validate: bool) -> Result<Vec<(String, FiniteMetricSpace)>, InputError> {
    let entries = std::fs::read_dir(dir).map_err(|source| InputError::Io { path: dir.to_owned(), source })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let ext = p.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
            p.is_file() && matches!(ext.as_str(), "csv" | "pts" | "xyz" | "txt")
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(InputError::Invalid(format!("{}: no .csv, .pts, .xyz or .txt files", dir.display())));
    }
    paths
        .iter()
        .map(|p| {
            let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or("").to_string();
            load_space(p, validate).map(|s| (name, s))
        })
        .collect()
}

/// A plain numeric matrix (`NaN` allowed), optionally with a `# labels:` line.
pub fn parse_matrix(text: &str) -> Result<(Vec<Vec<f64>>, Option<Vec<String>>), InputError> {
    let mut labels = None;
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(l) = rest.trim().strip_prefix("labels:") {
                labels = Some(l.split(',').map(|s| s.trim().to_string()).collect());
            }
            continue;
        }
        let row = line
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| InputError::Invalid(format!("line {}: `{}`: {e}", idx + 1, t.trim()))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok((rows, labels))
}

/// One label per non-empty line.
pub fn parse_labels(text: &str) -> Vec<String> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(String::from).collect()
}
