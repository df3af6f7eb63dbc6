//! Target label distributions: one-hot, uniform label smoothing and soft
//! ordinal (SORD) encodings.
//!
//! Class ranks are the zero-based integers `0..C`. A soft ordinal target is
//! the softmax of the negated distances from the true rank:
//!
//! ```text
//! y'_k = exp(-phi(y, k)) / sum_j exp(-phi(y, j))
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Default Huber transition point.
pub const DEFAULT_HUBER_DELTA: f64 = 1.0;

/// Default smoothing mass for label smoothing.
pub const DEFAULT_SMOOTHING: f64 = 0.1;

/// Distance between two class ranks used to build soft ordinal targets.
///
/// Every kind is non-negative, symmetric and zero exactly on the diagonal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DistanceMetric {
    /// `(a - b)^2`
    #[default]
    Squared,
    /// `|a - b|`
    Absolute,
    /// Standard Huber function of `|a - b|`.
    Huber { delta: f64 },
    /// `exp(|a - b|) - 1`
    Exponential,
}

impl DistanceMetric {
    pub fn huber() -> Self {
        DistanceMetric::Huber {
            delta: DEFAULT_HUBER_DELTA,
        }
    }

    /// All four kinds in ablation order, Huber at its default delta.
    pub fn all() -> [DistanceMetric; 4] {
        [
            DistanceMetric::Squared,
            DistanceMetric::Absolute,
            DistanceMetric::huber(),
            DistanceMetric::Exponential,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            DistanceMetric::Squared => "squared",
            DistanceMetric::Absolute => "absolute",
            DistanceMetric::Huber { .. } => "huber",
            DistanceMetric::Exponential => "exponential",
        }
    }

    /// Parses a metric name; `huber_delta` is only used for `"huber"`.
    pub fn parse(name: &str, huber_delta: f64) -> Result<Self> {
        let metric = match name.to_ascii_lowercase().as_str() {
            "squared" => DistanceMetric::Squared,
            "absolute" => DistanceMetric::Absolute,
            "huber" => DistanceMetric::Huber { delta: huber_delta },
            "exponential" => DistanceMetric::Exponential,
            other => return Err(invalid(format!("unknown distance metric `{other}`"))),
        };
        metric.validate()?;
        Ok(metric)
    }

    pub fn validate(&self) -> Result<()> {
        if let DistanceMetric::Huber { delta } = *self {
            if !(delta.is_finite() && delta > 0.0) {
                return Err(invalid(format!("huber delta must be positive, got {delta}")));
            }
        }
        Ok(())
    }

    pub fn distance(&self, a: f64, b: f64) -> f64 {
        let d = (a - b).abs();
        match *self {
            DistanceMetric::Squared => d * d,
            DistanceMetric::Absolute => d,
            DistanceMetric::Huber { delta } => {
                if d <= delta {
                    0.5 * d * d
                } else {
                    delta * (d - 0.5 * delta)
                }
            }
            DistanceMetric::Exponential => d.exp_m1(),
        }
    }
}

/// A target probability distribution over `C` ordered classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftLabel {
    pub probs: Vec<f64>,
    pub true_class: usize,
}

impl SoftLabel {
    pub fn num_classes(&self) -> usize {
        self.probs.len()
    }
}

fn check_class(true_class: usize, num_classes: usize) -> Result<()> {
    if num_classes < 2 {
        return Err(invalid(format!("need at least 2 classes, got {num_classes}")));
    }
    if true_class >= num_classes {
        return Err(invalid(format!(
            "class {true_class} out of range for {num_classes} classes"
        )));
    }
    Ok(())
}

pub fn one_hot(true_class: usize, num_classes: usize) -> Result<SoftLabel> {
    check_class(true_class, num_classes)?;
    let mut probs = vec![0.0; num_classes];
    probs[true_class] = 1.0;
    Ok(SoftLabel { probs, true_class })
}

/// Uniform label smoothing: `1 - eps + eps/C` on the true class, `eps/C` elsewhere.
pub fn smooth_labels(true_class: usize, num_classes: usize, epsilon: f64) -> Result<SoftLabel> {
    check_class(true_class, num_classes)?;
    if !(0.0..1.0).contains(&epsilon) {
        return Err(invalid(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    let off = epsilon / num_classes as f64;
    let mut probs = vec![off; num_classes];
    probs[true_class] = 1.0 - epsilon + off;
    Ok(SoftLabel { probs, true_class })
}

/// Soft ordinal encoding over the integer ranks `0..num_classes`.
pub fn soft_encode(
    true_class: usize,
    num_classes: usize,
    metric: DistanceMetric,
) -> Result<SoftLabel> {
    check_class(true_class, num_classes)?;
    let ranks: Vec<f64> = (0..num_classes).map(|k| k as f64).collect();
    soft_encode_with_ranks(true_class, &ranks, metric)
}

/// Soft ordinal encoding with explicit class ranks.
///
/// The true class's own rank is used as the anchor, so `ranks` may be any
/// increasing sequence (rescaled ranks sharpen or flatten the target).
pub fn soft_encode_with_ranks(
    true_class: usize,
    ranks: &[f64],
    metric: DistanceMetric,
) -> Result<SoftLabel> {
    check_class(true_class, ranks.len())?;
    metric.validate()?;
    if ranks.iter().any(|r| !r.is_finite()) {
        return Err(invalid("class ranks must be finite"));
    }
    let anchor = ranks[true_class];
    // phi(y, y) = 0 is the minimum, so exp(-phi) <= 1 and the sum is >= 1.
    let mut probs: Vec<f64> = ranks
        .iter()
        .map(|&r| (-metric.distance(anchor, r)).exp())
        .collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(SoftLabel { probs, true_class })
}
