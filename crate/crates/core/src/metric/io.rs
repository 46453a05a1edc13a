//! Plain-text formats.
//!
//! * distance matrix: `n` rows of `n` comma-separated decimals, optionally
//!   preceded by a `# labels: a,b,c` line;
//! * point cloud: whitespace-separated coordinates, one point per line;
//! * graph: a header line `n m` followed by `m` lines `u v` (0-indexed).

use std::fmt::Write as _;

use super::{FiniteMetricSpace, MetricError, SimpleGraph};

fn parse_err(line: usize, message: impl Into<String>) -> MetricError {
    MetricError::Parse { line, message: message.into() }
}

fn parse_f64(token: &str, line: usize) -> Result<f64, MetricError> {
    token
        .trim()
        .parse::<f64>()
        .map_err(|e| parse_err(line, format!("`{}`: {e}", token.trim())))
}

/// Parses a distance-matrix CSV and validates it with tolerance `tol`
/// (relative to the largest entry). `tol = None` skips the triangle check but
/// still requires a symmetric, zero-diagonal, nonnegative matrix.
pub fn parse_distance_csv(text: &str, tol: Option<f64>) -> Result<FiniteMetricSpace, MetricError> {
    let mut labels = None;
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(list) = rest.trim().strip_prefix("labels:") {
                if !rows.is_empty() || labels.is_some() {
                    return Err(parse_err(idx + 1, "labels line must come first"));
                }
                labels = Some(list.split(',').map(|s| s.trim().to_string()).collect::<Vec<_>>());
            }
            continue;
        }
        let row = line
            .split(',')
            .map(|t| parse_f64(t, idx + 1))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let space = match tol {
        Some(tol) => FiniteMetricSpace::validate(&rows, tol)?,
        None => {
            let n = rows.len();
            let flat = super::flatten_square(&rows)?;
            FiniteMetricSpace::from_flat_unchecked_triangle(n, flat)?
        }
    };
    match labels {
        Some(l) => space.with_labels(l),
        None => Ok(space),
    }
}

/// Inverse of [`parse_distance_csv`]; values use the shortest exact
/// round-trip representation.
pub fn write_distance_csv(space: &FiniteMetricSpace) -> String {
    let mut out = String::new();
    if let Some(labels) = space.labels() {
        let _ = writeln!(out, "# labels: {}", labels.join(","));
    }
    for i in 0..space.len() {
        let row: Vec<String> = space.row(i).iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn parse_point_cloud(text: &str) -> Result<Vec<Vec<f64>>, MetricError> {
    let mut points = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let p = line
            .split_whitespace()
            .map(|t| parse_f64(t, idx + 1))
            .collect::<Result<Vec<_>, _>>()?;
        points.push(p);
    }
    if points.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(points)
}

pub fn parse_graph(text: &str) -> Result<SimpleGraph, MetricError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or(MetricError::Empty)?;
    let mut it = header.split_whitespace();
    let next_usize = |line: usize, it: &mut std::str::SplitWhitespace<'_>| -> Result<usize, MetricError> {
        let tok = it.next().ok_or_else(|| parse_err(line, "missing integer"))?;
        tok.parse::<usize>().map_err(|e| parse_err(line, format!("`{tok}`: {e}")))
    };
    let n = next_usize(hline, &mut it)?;
    let m = next_usize(hline, &mut it)?;
    let mut edges = Vec::with_capacity(m);
    for (line, l) in lines.by_ref().take(m) {
        let mut it = l.split_whitespace();
        let u = next_usize(line, &mut it)?;
        let v = next_usize(line, &mut it)?;
        edges.push((u, v));
    }
    if edges.len() != m {
        return Err(parse_err(hline, format!("header announces {m} edges, found {}", edges.len())));
    }
    SimpleGraph::new(n, &edges)
}

pub fn write_graph(g: &SimpleGraph) -> String {
    let mut out = format!("{} {}\n", g.vertex_count(), g.edge_count());
    for (u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}
