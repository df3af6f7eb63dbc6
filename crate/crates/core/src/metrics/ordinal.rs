use super::{argmax, PredictionSet};
use crate::error::{invalid, Result};

fn check_pair(preds: &[usize], labels: &[usize]) -> Result<()> {
    if preds.len() != labels.len() {
        return Err(invalid(format!(
            "{} predictions but {} labels",
            preds.len(),
            labels.len()
        )));
    }
    if preds.is_empty() {
        return Err(invalid("no predictions"));
    }
    Ok(())
}

pub fn accuracy(preds: &[usize], labels: &[usize]) -> Result<f64> {
    check_pair(preds, labels)?;
    let hits = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / preds.len() as f64)
}

/// Mean absolute class-index error.
pub fn mae(preds: &[usize], labels: &[usize]) -> Result<f64> {
    check_pair(preds, labels)?;
    let total: usize = preds.iter().zip(labels).map(|(&p, &l)| p.abs_diff(l)).sum();
    Ok(total as f64 / preds.len() as f64)
}

/// Quadratic weighted kappa with weights `(i - j)^2 / (C - 1)^2`.
///
/// If chance agreement leaves no expected disagreement the result is 1 when
/// observed disagreement is also zero, and an error otherwise.
pub fn qwk(preds: &[usize], labels: &[usize], num_classes: usize) -> Result<f64> {
    check_pair(preds, labels)?;
    if num_classes < 2 {
        return Err(invalid("QWK needs at least 2 classes"));
    }
    if let Some(bad) = preds.iter().chain(labels).find(|&&c| c >= num_classes) {
        return Err(invalid(format!("class {bad} out of range for {num_classes} classes")));
    }
    let c = num_classes;
    let n = preds.len() as f64;
    let mut observed = vec![0.0f64; c * c];
    let mut label_marginal = vec![0.0f64; c];
    let mut pred_marginal = vec![0.0f64; c];
    for (&p, &l) in preds.iter().zip(labels) {
        observed[l * c + p] += 1.0;
        label_marginal[l] += 1.0;
        pred_marginal[p] += 1.0;
    }
    let denom_w = ((c - 1) * (c - 1)) as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..c {
        for j in 0..c {
            let w = ((i as f64) - (j as f64)).powi(2) / denom_w;
            num += w * observed[i * c + j];
            den += w * label_marginal[i] * pred_marginal[j] / n;
        }
    }
    if den == 0.0 {
        return if num == 0.0 {
            Ok(1.0)
        } else {
            Err(invalid("QWK undefined: no expected disagreement"))
        };
    }
    Ok(1.0 - num / den)
}

/// Non-decreasing up to `peak`, non-increasing after it.
fn unimodal_about(row: &[f64], peak: usize) -> bool {
    row[..=peak].windows(2).all(|w| w[0] <= w[1]) && row[peak..].windows(2).all(|w| w[0] >= w[1])
}

/// Fraction of rows that rise to the true label and fall after it
/// (plateaus allowed).
pub fn unimodality_fraction(p: &PredictionSet) -> Result<f64> {
    if p.is_empty() {
        return Err(invalid("unimodality of an empty prediction set"));
    }
    let hits = p
        .rows()
        .zip(p.labels())
        .filter(|(row, &y)| unimodal_about(row, y))
        .count();
    Ok(hits as f64 / p.len() as f64)
}

/// Fraction of rows that rise to their own argmax and fall after it,
/// ignoring the true label.
pub fn unimodality_fraction_at_mode(p: &PredictionSet) -> Result<f64> {
    if p.is_empty() {
        return Err(invalid("unimodality of an empty prediction set"));
    }
    let hits = p.rows().filter(|row| unimodal_about(row, argmax(row))).count();
    Ok(hits as f64 / p.len() as f64)
}
