//! Loss values and analytic logit gradients.
//!
//! The ordinal loss is the sum of a cross-entropy against a soft ordinal
//! target and a pairwise regularizer over adjacent logits. The regularizer
//! splits the class axis at the true class `y`: pairs below `y` are asked to
//! rise (`z_p < z_{p+1}`), pairs from `y` onward to fall. Each pair's margin
//! `r` is negative when the ordering holds and is fed through a log-barrier
//! that turns linear once `r` passes `-1/t^2`.

use serde::{Deserialize, Serialize};

use crate::encoding::{one_hot, smooth_labels, soft_encode, DistanceMetric, SoftLabel};
use crate::error::{invalid, Result};

/// Barrier temperature used when none is given.
pub const DEFAULT_T: f64 = 3.0;

/// A scalar loss together with its gradient with respect to the logits.
#[derive(Debug, Clone, PartialEq)]
pub struct LossResult {
    pub value: f64,
    pub grad: Vec<f64>,
}

impl LossResult {
    fn add(mut self, other: &LossResult) -> LossResult {
        self.value += other.value;
        for (g, o) in self.grad.iter_mut().zip(&other.grad) {
            *g += o;
        }
        self
    }
}

/// Temperature of the log-barrier penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierConfig {
    t: f64,
}

impl BarrierConfig {
    pub fn new(t: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(invalid(format!("barrier temperature must be positive, got {t}")));
        }
        Ok(BarrierConfig { t })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Margin at which the penalty switches from the log branch to the linear branch.
    pub fn boundary(&self) -> f64 {
        -1.0 / (self.t * self.t)
    }
}

impl Default for BarrierConfig {
    fn default() -> Self {
        BarrierConfig { t: DEFAULT_T }
    }
}

fn check_logits(z: &[f64]) -> Result<()> {
    if z.len() < 2 {
        return Err(invalid(format!("need at least 2 logits, got {}", z.len())));
    }
    if let Some(bad) = z.iter().find(|v| !v.is_finite()) {
        return Err(invalid(format!("logits must be finite, found {bad}")));
    }
    Ok(())
}

/// Numerically stable `log(softmax(z))`.
pub fn log_softmax(z: &[f64]) -> Result<Vec<f64>> {
    if z.is_empty() {
        return Err(invalid("empty logit vector"));
    }
    if let Some(bad) = z.iter().find(|v| !v.is_finite()) {
        return Err(invalid(format!("logits must be finite, found {bad}")));
    }
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = z.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
    Ok(z.iter().map(|v| v - lse).collect())
}

pub fn softmax(z: &[f64]) -> Result<Vec<f64>> {
    Ok(log_softmax(z)?.into_iter().map(f64::exp).collect())
}

/// Cross-entropy against an arbitrary target distribution.
///
/// `grad_k = softmax(z)_k - target_k`.
pub fn sce_loss(z: &[f64], target: &SoftLabel) -> Result<LossResult> {
    check_logits(z)?;
    if z.len() != target.probs.len() {
        return Err(invalid(format!(
            "logit length {} does not match target length {}",
            z.len(),
            target.probs.len()
        )));
    }
    let log_p = log_softmax(z)?;
    let value = -target
        .probs
        .iter()
        .zip(&log_p)
        .map(|(y, lp)| if *y == 0.0 { 0.0 } else { y * lp })
        .sum::<f64>();
    let grad = log_p
        .iter()
        .zip(&target.probs)
        .map(|(lp, y)| lp.exp() - y)
        .collect();
    Ok(LossResult { value, grad })
}

pub fn ce_loss(z: &[f64], true_class: usize) -> Result<LossResult> {
    sce_loss(z, &one_hot(true_class, z.len())?)
}

pub fn ls_loss(z: &[f64], true_class: usize, epsilon: f64) -> Result<LossResult> {
    sce_loss(z, &smooth_labels(true_class, z.len(), epsilon)?)
}

/// Piecewise barrier penalty: `-(1/t) log(-r)` for `r <= -1/t^2`, otherwise
/// the tangent line `t r - (1/t) log(1/t^2) + 1/t`.
pub fn barrier_penalty(r: f64, cfg: BarrierConfig) -> f64 {
    let t = cfg.t;
    if r <= cfg.boundary() {
        -(-r).ln() / t
    } else {
        t * r - (1.0 / (t * t)).ln() / t + 1.0 / t
    }
}

/// Derivative of [`barrier_penalty`] with respect to `r`.
pub fn barrier_penalty_grad(r: f64, cfg: BarrierConfig) -> f64 {
    let t = cfg.t;
    if r <= cfg.boundary() {
        -1.0 / (t * r)
    } else {
        t
    }
}

/// One adjacent-logit term of the regularizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegPair {
    /// Pair index `p`, touching logits `p` and `p + 1`.
    pub index: usize,
    /// True for pairs below the true class, where `r = z_p - z_{p+1}`.
    pub rising: bool,
    pub r: f64,
    pub penalty: f64,
    /// `dI/dr`
    pub slope: f64,
}

impl RegPair {
    /// Contribution of this pair to `dL/dz_p`.
    pub fn grad_lower(&self) -> f64 {
        if self.rising {
            self.slope
        } else {
            -self.slope
        }
    }

    /// Contribution of this pair to `dL/dz_{p+1}`.
    pub fn grad_upper(&self) -> f64 {
        -self.grad_lower()
    }
}

/// Per-pair breakdown of the regularizer for one logit vector.
pub fn reg_pairs(z: &[f64], true_class: usize, cfg: BarrierConfig) -> Result<Vec<RegPair>> {
    check_logits(z)?;
    if true_class >= z.len() {
        return Err(invalid(format!(
            "class {true_class} out of range for {} classes",
            z.len()
        )));
    }
    Ok(z
        .windows(2)
        .enumerate()
        .map(|(index, w)| {
            let rising = index < true_class;
            let r = if rising { w[0] - w[1] } else { w[1] - w[0] };
            RegPair {
                index,
                rising,
                r,
                penalty: barrier_penalty(r, cfg),
                slope: barrier_penalty_grad(r, cfg),
            }
        })
        .collect())
}

/// Unimodality regularizer summed over all adjacent pairs.
///
/// Interior logits collect gradient from both pairs that touch them.
pub fn reg_loss(z: &[f64], true_class: usize, cfg: BarrierConfig) -> Result<LossResult> {
    let pairs = reg_pairs(z, true_class, cfg)?;
    let mut grad = vec![0.0; z.len()];
    let mut value = 0.0;
    for pair in &pairs {
        value += pair.penalty;
        grad[pair.index] += pair.grad_lower();
        grad[pair.index + 1] += pair.grad_upper();
    }
    Ok(LossResult { value, grad })
}

/// Soft-encoded cross-entropy plus the unimodality regularizer, unweighted.
pub fn orcu_loss(
    z: &[f64],
    true_class: usize,
    num_classes: usize,
    metric: DistanceMetric,
    cfg: BarrierConfig,
) -> Result<LossResult> {
    let target = soft_encode(true_class, num_classes, metric)?;
    let sce = sce_loss(z, &target)?;
    let reg = reg_loss(z, true_class, cfg)?;
    Ok(sce.add(&reg))
}

/// Loss selection shared by the trainer and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum LossKind {
    Ce,
    Ls { epsilon: f64 },
    Sce { metric: DistanceMetric },
    Orcu { metric: DistanceMetric, t: f64 },
}

impl LossKind {
    pub fn orcu_default() -> Self {
        LossKind::Orcu {
            metric: DistanceMetric::Squared,
            t: DEFAULT_T,
        }
    }

    pub fn label(&self) -> String {
        match self {
            LossKind::Ce => "ce".into(),
            LossKind::Ls { epsilon } => format!("ls(eps={epsilon})"),
            LossKind::Sce { metric } => format!("sce({})", metric.name()),
            LossKind::Orcu { metric, t } => format!("orcu({},t={t})", metric.name()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LossKind::Ce => Ok(()),
            LossKind::Ls { epsilon } => smooth_labels(0, 2, epsilon).map(|_| ()),
            LossKind::Sce { metric } => metric.validate(),
            LossKind::Orcu { metric, t } => {
                metric.validate()?;
                BarrierConfig::new(t).map(|_| ())
            }
        }
    }

    /// Evaluates this loss on one logit vector.
    pub fn evaluate(&self, z: &[f64], true_class: usize) -> Result<LossResult> {
        match *self {
            LossKind::Ce => ce_loss(z, true_class),
            LossKind::Ls { epsilon } => ls_loss(z, true_class, epsilon),
            LossKind::Sce { metric } => {
                sce_loss(z, &soft_encode(true_class, z.len(), metric)?)
            }
            LossKind::Orcu { metric, t } => {
                orcu_loss(z, true_class, z.len(), metric, BarrierConfig::new(t)?)
            }
        }
    }
}

/// How per-sample losses are combined over a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    #[default]
    Mean,
    Sum,
}

impl Reduction {
    pub fn scale(&self, batch_len: usize) -> f64 {
        match self {
            Reduction::Mean => 1.0 / batch_len as f64,
            Reduction::Sum => 1.0,
        }
    }
}

/// Batched loss over rows of logits; gradients are per row and already scaled
/// by the reduction.
pub fn batch_loss(
    loss: LossKind,
    logits: &[Vec<f64>],
    labels: &[usize],
    reduction: Reduction,
) -> Result<(f64, Vec<Vec<f64>>)> {
    if logits.len() != labels.len() {
        return Err(invalid("logit rows and labels differ in length"));
    }
    if logits.is_empty() {
        return Err(invalid("empty batch"));
    }
    let scale = reduction.scale(logits.len());
    let mut total = 0.0;
    let mut grads = Vec::with_capacity(logits.len());
    for (z, &y) in logits.iter().zip(labels) {
        let mut res = loss.evaluate(z, y)?;
        total += res.value;
        res.grad.iter_mut().for_each(|g| *g *= scale);
        grads.push(res.grad);
    }
    Ok((total * scale, grads))
}
