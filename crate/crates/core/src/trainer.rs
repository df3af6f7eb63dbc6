//! Linear-softmax and one-hidden-layer tanh models trained by plain
//! mini-batch gradient descent. Parameters live in one flat vector so the
//! update and finite-difference checks treat every layer alike.
//!
//! Layouts (row-major):
//! - linear: `W[C x D]`, `b[C]`
//! - mlp:    `W1[H x D]`, `b1[H]`, `W2[C x H]`, `b2[C]`

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::OrdinalDataset;
use crate::error::{invalid, Error, Result};
use crate::losses::{softmax, LossKind, Reduction};
use crate::metrics::{format_f64, reliability_bins, BinStats, MetricReport, PredictionSet, DEFAULT_BINS};

pub const DEFAULT_LINEAR_LR: f64 = 0.05;
pub const DEFAULT_MLP_LR: f64 = 0.01;
pub const DEFAULT_EPOCHS: usize = 200;
pub const DEFAULT_BATCH_SIZE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Linear,
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub input_dim: usize,
    /// Ignored for linear models.
    pub hidden_dim: usize,
    pub num_classes: usize,
    pub init_seed: u64,
}

impl ModelSpec {
    pub fn linear(input_dim: usize, num_classes: usize, init_seed: u64) -> Self {
        ModelSpec {
            kind: ModelKind::Linear,
            input_dim,
            hidden_dim: 0,
            num_classes,
            init_seed,
        }
    }

    pub fn mlp(input_dim: usize, hidden_dim: usize, num_classes: usize, init_seed: u64) -> Self {
        ModelSpec {
            kind: ModelKind::Mlp,
            input_dim,
            hidden_dim,
            num_classes,
            init_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(invalid("input dimension must be at least 1"));
        }
        if self.num_classes < 2 {
            return Err(invalid(format!("need at least 2 classes, got {}", self.num_classes)));
        }
        if self.kind == ModelKind::Mlp && self.hidden_dim == 0 {
            return Err(invalid("MLP hidden dimension must be at least 1"));
        }
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        let (d, h, c) = (self.input_dim, self.hidden_dim, self.num_classes);
        match self.kind {
            ModelKind::Linear => c * d + c,
            ModelKind::Mlp => h * d + h + c * h + c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    spec: ModelSpec,
    params: Vec<f64>,
}

/// Weights uniform on `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, biases zero.
pub fn init_model(spec: ModelSpec) -> Result<Model> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.init_seed);
    let mut params = vec![0.0; spec.num_params()];
    let mut fill = |slice: &mut [f64], fan_in: usize| {
        let a = 1.0 / (fan_in as f64).sqrt();
        slice.iter_mut().for_each(|w| *w = rng.random_range(-a..a));
    };
    let (d, h, c) = (spec.input_dim, spec.hidden_dim, spec.num_classes);
    match spec.kind {
        ModelKind::Linear => fill(&mut params[..c * d], d),
        ModelKind::Mlp => {
            fill(&mut params[..h * d], d);
            let w2 = h * d + h;
            fill(&mut params[w2..w2 + c * h], h);
        }
    }
    Ok(Model { spec, params })
}

/// `out = W x + b` for row-major `W[rows x x.len()]`.
fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend(
        w.chunks_exact(x.len())
            .zip(b)
            .map(|(row, bias)| row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + bias),
    );
}

impl Model {
    pub fn from_params(spec: ModelSpec, params: Vec<f64>) -> Result<Model> {
        spec.validate()?;
        if params.len() != spec.num_params() {
            return Err(invalid(format!(
                "expected {} parameters, got {}",
                spec.num_params(),
                params.len()
            )));
        }
        Ok(Model { spec, params })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.spec.input_dim {
            return Err(invalid(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.spec.input_dim
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut hidden = Vec::new();
        let mut logits = Vec::new();
        self.forward_into(x, &mut hidden, &mut logits);
        Ok(logits)
    }

    pub fn forward_batch(&self, ds: &OrdinalDataset) -> Result<Vec<Vec<f64>>> {
        ds.rows().map(|x| self.forward(x)).collect()
    }

    /// Fills `hidden` (tanh activations, MLP only) and `logits`.
    fn forward_into(&self, x: &[f64], hidden: &mut Vec<f64>, logits: &mut Vec<f64>) {
        let (d, h, c) = (self.spec.input_dim, self.spec.hidden_dim, self.spec.num_classes);
        let p = &self.params;
        match self.spec.kind {
            ModelKind::Linear => affine(&p[..c * d], &p[c * d..], x, logits),
            ModelKind::Mlp => {
                let (w1, rest) = p.split_at(h * d);
                let (b1, rest) = rest.split_at(h);
                let (w2, b2) = rest.split_at(c * h);
                affine(w1, b1, x, hidden);
                hidden.iter_mut().for_each(|a| *a = a.tanh());
                affine(w2, b2, hidden, logits);
            }
        }
    }

    /// Adds the parameter gradient for one sample to `grad`, given the
    /// gradient of the loss with respect to that sample's logits.
    fn backward_into(&self, x: &[f64], hidden: &[f64], dlogits: &[f64], grad: &mut [f64]) {
        let (d, h, c) = (self.spec.input_dim, self.spec.hidden_dim, self.spec.num_classes);
        match self.spec.kind {
            ModelKind::Linear => {
                let (gw, gb) = grad.split_at_mut(c * d);
                for (k, &g) in dlogits.iter().enumerate() {
                    gw[k * d..(k + 1) * d]
                        .iter_mut()
                        .zip(x)
                        .for_each(|(w, v)| *w += g * v);
                    gb[k] += g;
                }
            }
            ModelKind::Mlp => {
                let w2 = &self.params[h * d + h..h * d + h + c * h];
                let (gw1, rest) = grad.split_at_mut(h * d);
                let (gb1, rest) = rest.split_at_mut(h);
                let (gw2, gb2) = rest.split_at_mut(c * h);
                let mut dhidden = vec![0.0; h];
                for (k, &g) in dlogits.iter().enumerate() {
                    let row = &w2[k * h..(k + 1) * h];
                    for j in 0..h {
                        gw2[k * h + j] += g * hidden[j];
                        dhidden[j] += g * row[j];
                    }
                    gb2[k] += g;
                }
                for j in 0..h {
                    let dpre = dhidden[j] * (1.0 - hidden[j] * hidden[j]);
                    gw1[j * d..(j + 1) * d]
                        .iter_mut()
                        .zip(x)
                        .for_each(|(w, v)| *w += dpre * v);
                    gb1[j] += dpre;
                }
            }
        }
    }

    /// Reduced loss over `indices` of `ds` and its gradient w.r.t. parameters.
    pub fn batch_objective(
        &self,
        ds: &OrdinalDataset,
        indices: &[usize],
        loss: LossKind,
        reduction: Reduction,
    ) -> Result<(f64, Vec<f64>)> {
        let mut grad = vec![0.0; self.params.len()];
        let value = self.accumulate(ds, indices, loss, reduction, &mut grad)?;
        Ok((value, grad))
    }

    fn accumulate(
        &self,
        ds: &OrdinalDataset,
        indices: &[usize],
        loss: LossKind,
        reduction: Reduction,
        grad: &mut [f64],
    ) -> Result<f64> {
        if indices.is_empty() {
            return Err(invalid("empty batch"));
        }
        if ds.dim() != self.spec.input_dim || ds.num_classes() != self.spec.num_classes {
            return Err(invalid(format!(
                "dataset shape ({} features, {} classes) does not match model ({}, {})",
                ds.dim(),
                ds.num_classes(),
                self.spec.input_dim,
                self.spec.num_classes
            )));
        }
        let scale = reduction.scale(indices.len());
        let mut hidden = Vec::new();
        let mut logits = Vec::new();
        let mut total = 0.0;
        for &i in indices {
            let x = ds.row(i);
            self.forward_into(x, &mut hidden, &mut logits);
            if logits.iter().any(|v| !v.is_finite()) {
                return Ok(f64::NAN);
            }
            let mut res = loss.evaluate(&logits, ds.labels()[i])?;
            total += res.value;
            res.grad.iter_mut().for_each(|g| *g *= scale);
            self.backward_into(x, &hidden, &res.grad, grad);
        }
        Ok(total * scale)
    }

    /// Mean per-sample loss over the whole dataset.
    pub fn dataset_loss(&self, ds: &OrdinalDataset, loss: LossKind) -> Result<f64> {
        let all: Vec<usize> = (0..ds.len()).collect();
        Ok(self.batch_objective(ds, &all, loss, Reduction::Mean)?.0)
    }

    /// Softmax predictions paired with the dataset labels.
    pub fn predict(&self, ds: &OrdinalDataset) -> Result<PredictionSet> {
        let rows = self
            .forward_batch(ds)?
            .iter()
            .map(|z| softmax(z))
            .collect::<Result<Vec<_>>>()?;
        PredictionSet::new(rows, ds.labels().to_vec(), ds.num_classes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub shuffle_seed: u64,
    pub reduction: Reduction,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss: LossKind::orcu_default(),
            learning_rate: DEFAULT_LINEAR_LR,
            epochs: DEFAULT_EPOCHS,
            batch_size: DEFAULT_BATCH_SIZE,
            shuffle_seed: 0,
            reduction: Reduction::Mean,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(invalid(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(invalid("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch size must be at least 1"));
        }
        Ok(())
    }
}

/// Mean training loss per epoch, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epoch_losses: Vec<f64>,
}

impl TrainHistory {
    /// `epoch,loss` CSV, epochs counted from 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss\n");
        for (i, l) in self.epoch_losses.iter().enumerate() {
            let _ = writeln!(out, "{},{}", i + 1, format_f64(*l));
        }
        out
    }
}

/// Mini-batch gradient descent with a constant learning rate.
pub fn train(mut model: Model, ds: &OrdinalDataset, cfg: &TrainConfig) -> Result<(Model, TrainHistory)> {
    cfg.validate()?;
    if ds.labels().iter().any(|&l| l >= model.spec.num_classes) {
        return Err(invalid("dataset label exceeds the model's class count"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut grad = vec![0.0; model.params.len()];
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let value = model.accumulate(ds, batch, cfg.loss, Reduction::Sum, &mut grad)?;
            if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch, loss: value });
            }
            epoch_total += value;
            let step = cfg.learning_rate * cfg.reduction.scale(batch.len());
            model
                .params
                .iter_mut()
                .zip(&grad)
                .for_each(|(p, g)| *p -= step * g);
        }
        let mean = epoch_total / ds.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Diverged { epoch, loss: mean });
        }
        epoch_losses.push(mean);
    }
    Ok((model, TrainHistory { epoch_losses }))
}

/// Test-set metrics plus reliability bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub metrics: MetricReport,
    pub bins: Vec<BinStats>,
}

pub fn evaluate(model: &Model, ds: &OrdinalDataset) -> Result<Evaluation> {
    evaluate_with(model, ds, DEFAULT_BINS, DEFAULT_BINS)
}

pub fn evaluate_with(model: &Model, ds: &OrdinalDataset, num_bins: usize, num_ranges: usize) -> Result<Evaluation> {
    if ds.is_empty() {
        return Err(invalid("cannot evaluate on an empty dataset"));
    }
    let preds = model.predict(ds)?;
    Ok(Evaluation {
        metrics: MetricReport::compute(&preds, num_bins, num_ranges)?,
        bins: reliability_bins(&preds, num_bins)?,
    })
}

/// Everything a training run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model: ModelSpec,
    pub config: TrainConfig,
    pub epoch_losses: Vec<f64>,
    pub metrics: MetricReport,
    pub bins: Vec<BinStats>,
}

impl TrainReport {
    pub fn new(model: ModelSpec, config: TrainConfig, history: TrainHistory, eval: Evaluation) -> Self {
        TrainReport {
            model,
            config,
            epoch_losses: history.epoch_losses,
            metrics: eval.metrics,
            bins: eval.bins,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_ordered_logit;

    #[test]
    fn init_is_seeded_and_biases_start_at_zero() {
        let spec = ModelSpec::linear(4, 3, 7);
        let a = init_model(spec).unwrap();
        assert_eq!(a, init_model(spec).unwrap());
        assert_ne!(a, init_model(ModelSpec { init_seed: 8, ..spec }).unwrap());
        assert!(a.params()[12..].iter().all(|&b| b == 0.0));
        let z = a.forward(&[0.0; 4]).unwrap();
        assert_eq!(softmax(&z).unwrap(), vec![1.0 / 3.0; 3]);
    }

    #[test]
    fn init_rejects_bad_specs() {
        assert!(init_model(ModelSpec::mlp(3, 0, 3, 0)).is_err());
        assert!(init_model(ModelSpec::linear(0, 3, 0)).is_err());
        assert!(init_model(ModelSpec::linear(3, 1, 0)).is_err());
    }

    #[test]
    fn linear_forward_by_hand() {
        let spec = ModelSpec::linear(2, 3, 0);
        let model = Model::from_params(spec, vec![1.0, 2.0, 0.0, -1.0, 3.0, 0.5, 0.1, 0.2, 0.3]).unwrap();
        let z = model.forward(&[2.0, 4.0]).unwrap();
        assert_eq!(z, vec![10.1, -3.8, 8.3]);
        assert!(model.forward(&[1.0]).is_err());
        assert!(Model::from_params(spec, vec![0.0; 3]).is_err());
    }

    #[test]
    fn mlp_forward_by_hand() {
        // D = 1, H = 2, C = 2
        let spec = ModelSpec::mlp(1, 2, 2, 0);
        let params = vec![1.0, -1.0, 0.0, 0.5, 1.0, 2.0, 0.0, 1.0, 0.1, -0.1];
        let model = Model::from_params(spec, params).unwrap();
        let x = 0.3f64;
        let h0 = x.tanh();
        let h1 = (-x + 0.5).tanh();
        let z = model.forward(&[x]).unwrap();
        assert!((z[0] - (h0 + 2.0 * h1 + 0.1)).abs() < 1e-15);
        assert!((z[1] - (h1 - 0.1)).abs() < 1e-15);
    }

    #[test]
    fn batched_forward_matches_rows_and_stays_finite() {
        let ds = generate_ordered_logit(20, 3, 3, 0.5, 2).unwrap();
        let model = init_model(ModelSpec::mlp(3, 5, 3, 1)).unwrap();
        let batch = model.forward_batch(&ds).unwrap();
        for (i, z) in batch.iter().enumerate() {
            assert_eq!(z, &model.forward(ds.row(i)).unwrap());
        }
        let big = model.forward(&[1e150, -1e150, 1e150]).unwrap();
        let p = softmax(&big).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig::default();
        assert!(ok.validate().is_ok());
        assert!(TrainConfig { learning_rate: 0.0, ..ok }.validate().is_err());
        assert!(TrainConfig { epochs: 0, ..ok }.validate().is_err());
        assert!(TrainConfig { batch_size: 0, ..ok }.validate().is_err());
    }

    #[test]
    fn divergence_names_the_epoch() {
        let ds = generate_ordered_logit(50, 3, 3, 0.2, 4).unwrap();
        let model = init_model(ModelSpec::linear(3, 3, 0)).unwrap();
        let cfg = TrainConfig {
            loss: LossKind::Ce,
            learning_rate: 1e308,
            epochs: 5,
            ..TrainConfig::default()
        };
        match train(model, &ds, &cfg) {
            Err(Error::Diverged { epoch, .. }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn history_csv() {
        let h = TrainHistory {
            epoch_losses: vec![1.5, 0.25],
        };
        assert_eq!(
            h.to_csv(),
            "epoch,loss\n1,1.5000000000000000e0\n2,2.5000000000000000e-1\n"
        );
    }
}
