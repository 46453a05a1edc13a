use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("matrix row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("{labels} labels for {items} items")]
    LabelCount { labels: usize, items: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifiedItem {
    pub index: usize,
    /// `None` when there is no other item with a finite distance.
    pub nearest: Option<usize>,
    pub predicted: Option<String>,
    pub truth: String,
    pub correct: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub items: Vec<ClassifiedItem>,
    pub success_frequency: f64,
    pub matrix: Vec<Vec<f64>>,
}

/// Leave-one-out nearest neighbour: each item takes the label of the closest
/// other item (lowest index on ties). `NaN` entries are never nearest.
pub fn nearest_neighbor_classify(matrix: &[Vec<f64>], labels: &[String]) -> Result<ClassificationReport, ClassifyError> {
    let n = matrix.len();
    if let Some((row, r)) = matrix.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(ClassifyError::NotSquare { row, len: r.len(), expected: n });
    }
    if labels.len() != n {
        return Err(ClassifyError::LabelCount { labels: labels.len(), items: n });
    }
    let items: Vec<ClassifiedItem> = (0..n)
        .map(|i| {
            let mut nearest: Option<usize> = None;
            for j in (0..n).filter(|&j| j != i && !matrix[i][j].is_nan()) {
                if nearest.is_none_or(|k| matrix[i][j] < matrix[i][k]) {
                    nearest = Some(j);
                }
            }
            let predicted = nearest.map(|k| labels[k].clone());
            let correct = predicted.as_deref() == Some(labels[i].as_str());
            ClassifiedItem { index: i, nearest, predicted, truth: labels[i].clone(), correct }
        })
        .collect();
    let hits = items.iter().filter(|it| it.correct).count();
    let success_frequency = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
    Ok(ClassificationReport { items, success_frequency, matrix: matrix.to_vec() })
}
