//! Calibration and ordinal metrics over a set of predicted distributions.

mod calibration;
mod export;
mod ordinal;

pub use calibration::{ace, ece, reliability_bins, sce_metric, BinStats};
pub use export::{
    bins_from_csv, bins_to_csv, bins_to_json, format_f64, predictions_from_csv, predictions_to_csv,
};
pub use ordinal::{accuracy, mae, qwk, unimodality_fraction, unimodality_fraction_at_mode};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Default bin count for ECE/SCE and range count for ACE.
pub const DEFAULT_BINS: usize = 15;

/// Tolerance on row sums accepted by [`PredictionSet::new`].
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// `N` predicted probability rows over `C` classes with their true labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    probs: Vec<f64>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl PredictionSet {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        Self::with_tolerance(rows, labels, num_classes, ROW_SUM_TOLERANCE)
    }

    /// Like [`PredictionSet::new`] but with a caller-chosen row-sum tolerance.
    pub fn with_tolerance(
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
        num_classes: usize,
        tolerance: f64,
    ) -> Result<Self> {
        if num_classes < 2 {
            return Err(invalid(format!("need at least 2 classes, got {num_classes}")));
        }
        if rows.len() != labels.len() {
            return Err(invalid(format!(
                "{} probability rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let mut probs = Vec::with_capacity(rows.len() * num_classes);
        for (i, (row, &label)) in rows.iter().zip(&labels).enumerate() {
            validate_row(row, num_classes, tolerance).map_err(|e| invalid(format!("row {i}: {e}")))?;
            if label >= num_classes {
                return Err(invalid(format!("row {i}: label {label} out of range")));
            }
            probs.extend_from_slice(row);
        }
        Ok(PredictionSet {
            probs,
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.num_classes..(i + 1) * self.num_classes]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks_exact(self.num_classes)
    }

    /// Argmax class per row; ties go to the lowest index.
    pub fn predicted(&self) -> Vec<usize> {
        self.rows().map(argmax).collect()
    }

    /// Max-probability confidence per row.
    pub fn confidences(&self) -> Vec<f64> {
        self.rows()
            .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }
}

/// Checks that a row is a probability vector of the given width.
pub(crate) fn validate_row(row: &[f64], num_classes: usize, tolerance: f64) -> std::result::Result<(), String> {
    if row.len() != num_classes {
        return Err(format!("expected {num_classes} probabilities, got {}", row.len()));
    }
    if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(format!("probability {p} outside [0, 1]"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > tolerance {
        return Err(format!("probabilities sum to {sum}, not 1"));
    }
    Ok(())
}

pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &p) in row.iter().enumerate().skip(1) {
        if p > row[best] {
            best = k;
        }
    }
    best
}

/// Every metric reported for a set of predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub mae: f64,
    pub qwk: f64,
    pub ece: f64,
    pub sce: f64,
    pub ace: f64,
    /// Fraction of rows unimodal around their true label.
    pub unimodal: f64,
    /// Fraction of rows unimodal around their own argmax.
    pub unimodal_at_mode: f64,
}

impl MetricReport {
    /// Computes the full metric suite; `num_ranges` is clamped to `N` for ACE.
    pub fn compute(p: &PredictionSet, num_bins: usize, num_ranges: usize) -> Result<Self> {
        let preds = p.predicted();
        Ok(MetricReport {
            accuracy: accuracy(&preds, p.labels())?,
            mae: mae(&preds, p.labels())?,
            qwk: qwk(&preds, p.labels(), p.num_classes())?,
            ece: ece(p, num_bins)?,
            sce: sce_metric(p, num_bins)?,
            ace: ace(p, num_ranges.min(p.len()))?,
            unimodal: unimodality_fraction(p)?,
            unimodal_at_mode: unimodality_fraction_at_mode(p)?,
        })
    }
}
