use serde::{Deserialize, Serialize};

use super::PredictionSet;
use crate::error::{invalid, Result};

/// One equal-width confidence bin of a reliability diagram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub bin_id: usize,
    pub lower_edge: f64,
    pub upper_edge: f64,
    pub count: usize,
    /// Zero for empty bins.
    pub mean_confidence: f64,
    /// Zero for empty bins.
    pub mean_accuracy: f64,
}

fn lower_edge(bin: usize, num_bins: usize) -> f64 {
    bin as f64 / num_bins as f64
}

/// Bin index for a confidence in `[0, 1]`. Bins are `[lo, hi)` except the
/// last, which is closed at 1. The index is corrected against the same edges
/// reported in [`BinStats`] so float rounding in `c * B` cannot disagree.
fn bin_index(c: f64, num_bins: usize) -> usize {
    let mut b = ((c * num_bins as f64).floor().max(0.0) as usize).min(num_bins - 1);
    while b > 0 && c < lower_edge(b, num_bins) {
        b -= 1;
    }
    while b + 1 < num_bins && c >= lower_edge(b + 1, num_bins) {
        b += 1;
    }
    b
}

/// Accumulates `(confidence, hit)` pairs into equal-width bins.
fn bin_samples(samples: impl Iterator<Item = (f64, bool)>, num_bins: usize) -> Vec<BinStats> {
    let mut count = vec![0usize; num_bins];
    let mut conf = vec![0.0f64; num_bins];
    let mut hits = vec![0usize; num_bins];
    for (c, hit) in samples {
        let b = bin_index(c, num_bins);
        count[b] += 1;
        conf[b] += c;
        hits[b] += hit as usize;
    }
    (0..num_bins)
        .map(|b| {
            let n = count[b];
            let (mean_confidence, mean_accuracy) = if n == 0 {
                (0.0, 0.0)
            } else {
                (conf[b] / n as f64, hits[b] as f64 / n as f64)
            };
            BinStats {
                bin_id: b,
                lower_edge: lower_edge(b, num_bins),
                upper_edge: lower_edge(b + 1, num_bins),
                count: n,
                mean_confidence,
                mean_accuracy,
            }
        })
        .collect()
}

fn weighted_gap(bins: &[BinStats], total: usize) -> f64 {
    bins.iter()
        .filter(|b| b.count > 0)
        .map(|b| b.count as f64 / total as f64 * (b.mean_accuracy - b.mean_confidence).abs())
        .sum()
}

/// Reliability-diagram bins over max-probability confidence.
pub fn reliability_bins(p: &PredictionSet, num_bins: usize) -> Result<Vec<BinStats>> {
    if num_bins < 1 {
        return Err(invalid("need at least one bin"));
    }
    let preds = p.predicted();
    let samples = p
        .confidences()
        .into_iter()
        .zip(preds.into_iter().zip(p.labels()))
        .map(|(c, (pred, &label))| (c, pred == label));
    Ok(bin_samples(samples, num_bins))
}

/// Expected calibration error on top-label confidence.
pub fn ece(p: &PredictionSet, num_bins: usize) -> Result<f64> {
    if p.is_empty() {
        return Err(invalid("ECE of an empty prediction set"));
    }
    Ok(weighted_gap(&reliability_bins(p, num_bins)?, p.len()))
}

/// Static calibration error: class-wise binned calibration error averaged
/// over classes.
pub fn sce_metric(p: &PredictionSet, num_bins: usize) -> Result<f64> {
    if p.is_empty() {
        return Err(invalid("SCE of an empty prediction set"));
    }
    if num_bins < 1 {
        return Err(invalid("need at least one bin"));
    }
    let k_total = p.num_classes();
    let sum: f64 = (0..k_total)
        .map(|k| {
            let samples = p
                .rows()
                .zip(p.labels())
                .map(|(row, &label)| (row[k], label == k));
            weighted_gap(&bin_samples(samples, num_bins), p.len())
        })
        .sum();
    Ok(sum / k_total as f64)
}

/// Adaptive calibration error: per class, samples are stably sorted by that
/// class's probability and cut into `num_ranges` contiguous ranges whose sizes
/// differ by at most one (larger ranges first). Every `(range, class)` cell
/// has equal weight.
pub fn ace(p: &PredictionSet, num_ranges: usize) -> Result<f64> {
    if num_ranges < 1 {
        return Err(invalid("need at least one range"));
    }
    if p.len() < num_ranges {
        return Err(invalid(format!(
            "ACE with {} ranges needs at least as many samples, got {}",
            num_ranges,
            p.len()
        )));
    }
    let n = p.len();
    let base = n / num_ranges;
    let extra = n % num_ranges;
    let mut total = 0.0;
    for k in 0..p.num_classes() {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| p.row(a)[k].total_cmp(&p.row(b)[k]));
        let mut start = 0;
        for r in 0..num_ranges {
            let size = base + usize::from(r < extra);
            let cell = &order[start..start + size];
            start += size;
            let conf = cell.iter().map(|&i| p.row(i)[k]).sum::<f64>() / size as f64;
            let acc = cell.iter().filter(|&&i| p.labels()[i] == k).count() as f64 / size as f64;
            total += (acc - conf).abs();
        }
    }
    Ok(total / (p.num_classes() * num_ranges) as f64)
}
