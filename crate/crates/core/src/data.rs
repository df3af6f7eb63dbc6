//! Synthetic ordinal datasets, deterministic splits and CSV storage.
//!
//! All randomness comes from `ChaCha8Rng` seeded with `seed_from_u64`, which
//! produces the same stream on every platform.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Row-major feature matrix with integer ordinal labels.
#[derive(Debug, Clone, PartialEq)]
pub struct OrdinalDataset {
    features: Vec<f64>,
    dim: usize,
    labels: Vec<usize>,
    num_classes: usize,
    pub seed: u64,
}

impl OrdinalDataset {
    pub fn new(
        features: Vec<f64>,
        dim: usize,
        labels: Vec<usize>,
        num_classes: usize,
        seed: u64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("feature dimension must be at least 1"));
        }
        if num_classes < 2 {
            return Err(invalid(format!("need at least 2 classes, got {num_classes}")));
        }
        if labels.is_empty() {
            return Err(invalid("dataset has no samples"));
        }
        if features.len() != labels.len() * dim {
            return Err(invalid(format!(
                "{} feature values do not fill {} rows of width {dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(invalid(format!("label {bad} out of range for {num_classes} classes")));
        }
        Ok(OrdinalDataset {
            features,
            dim,
            labels,
            num_classes,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.dim)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows at the given indices, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<OrdinalDataset> {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(invalid(format!("row index {i} out of range")));
            }
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        OrdinalDataset::new(features, self.dim, labels, self.num_classes, self.seed)
    }
}

/// Parameters of the ordered-logit generator; stored in dataset manifests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub n: usize,
    pub dim: usize,
    pub num_classes: usize,
    pub noise_scale: f64,
    pub seed: u64,
}

/// Generator output before labels are attached to rows.
#[derive(Debug, Clone)]
pub struct LatentDraw {
    pub dataset: OrdinalDataset,
    /// Unit direction `w` of the latent score.
    pub weights: Vec<f64>,
    /// Latent score `u = w.x + noise` per row.
    pub latent: Vec<f64>,
    /// `C - 1` increasing cut points on `u`.
    pub thresholds: Vec<f64>,
}

/// Ordered-logit data: `x ~ N(0, I)`, `u = w.x + s * eps` with standard
/// logistic `eps`, labels from cut points at equally spaced empirical
/// quantiles of `u`, so each class holds `n / C` rows up to rounding.
pub fn generate_ordered_logit(
    n: usize,
    dim: usize,
    num_classes: usize,
    noise_scale: f64,
    seed: u64,
) -> Result<OrdinalDataset> {
    Ok(generate_with_latent(GeneratorParams {
        n,
        dim,
        num_classes,
        noise_scale,
        seed,
    })?
    .dataset)
}

pub fn generate_with_latent(params: GeneratorParams) -> Result<LatentDraw> {
    let GeneratorParams {
        n,
        dim,
        num_classes,
        noise_scale,
        seed,
    } = params;
    if num_classes < 2 {
        return Err(invalid(format!("need at least 2 classes, got {num_classes}")));
    }
    if n < num_classes {
        return Err(invalid(format!("need n >= classes, got n = {n}, classes = {num_classes}")));
    }
    if dim == 0 {
        return Err(invalid("feature dimension must be at least 1"));
    }
    if !(noise_scale.is_finite() && noise_scale >= 0.0) {
        return Err(invalid(format!("noise scale must be non-negative, got {noise_scale}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    // a zero draw has probability zero; fall back to the first axis anyway
    if norm > 0.0 {
        weights.iter_mut().for_each(|w| *w /= norm);
    } else {
        weights[0] = 1.0;
    }

    let mut features = Vec::with_capacity(n * dim);
    let mut latent = Vec::with_capacity(n);
    for _ in 0..n {
        let start = features.len();
        features.extend((0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let signal: f64 = features[start..].iter().zip(&weights).map(|(x, w)| x * w).sum();
        let u: f64 = rng.random_range(f64::EPSILON..1.0);
        let eps = (u / (1.0 - u)).ln();
        latent.push(signal + noise_scale * eps);
    }

    let mut sorted = latent.clone();
    sorted.sort_by(f64::total_cmp);
    let thresholds: Vec<f64> = (1..num_classes)
        .map(|j| {
            let idx = j * n / num_classes;
            0.5 * (sorted[idx - 1] + sorted[idx])
        })
        .collect();
    let labels = latent
        .iter()
        .map(|&u| thresholds.iter().filter(|&&th| u > th).count())
        .collect();

    Ok(LatentDraw {
        dataset: OrdinalDataset::new(features, dim, labels, num_classes, seed)?,
        weights,
        latent,
        thresholds,
    })
}

/// Train/validation/test fractions plus the shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, val: f64, test: f64, seed: u64) -> Result<Self> {
        let spec = SplitSpec {
            train_fraction: train,
            val_fraction: val,
            test_fraction: test,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train_fraction, self.val_fraction, self.test_fraction];
        if parts.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return Err(invalid(format!("split fractions must lie in (0, 1), got {parts:?}")));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("split fractions must sum to 1, got {parts:?}")));
        }
        Ok(())
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            val_fraction: 0.1,
            test_fraction: 0.1,
            seed: 0,
        }
    }
}

/// Index sets of a split, each in shuffled order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<SplitIndices> {
    spec.validate()?;
    let n_train = (n as f64 * spec.train_fraction).round() as usize;
    let n_val = (n as f64 * spec.val_fraction).round() as usize;
    if n_train == 0 || n_val == 0 || n_train + n_val >= n {
        return Err(invalid(format!("split of {n} rows leaves an empty part")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let test = order.split_off(n_train + n_val);
    let val = order.split_off(n_train);
    Ok(SplitIndices {
        train: order,
        val,
        test,
    })
}

/// Splits into `(train, val, test)`.
pub fn split(
    ds: &OrdinalDataset,
    spec: &SplitSpec,
) -> Result<(OrdinalDataset, OrdinalDataset, OrdinalDataset)> {
    let idx = split_indices(ds.len(), spec)?;
    Ok((ds.subset(&idx.train)?, ds.subset(&idx.val)?, ds.subset(&idx.test)?))
}

/// CSV text with header `f0,...,f{D-1},label`.
pub fn to_csv_string(ds: &OrdinalDataset) -> String {
    let mut out = String::new();
    for j in 0..ds.dim {
        let _ = write!(out, "f{j},");
    }
    out.push_str("label\n");
    for (row, label) in ds.rows().zip(&ds.labels) {
        for x in row {
            // Display prints the shortest representation that parses back exactly
            let _ = write!(out, "{x},");
        }
        let _ = writeln!(out, "{label}");
    }
    out
}

pub fn save_csv(ds: &OrdinalDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_csv_string(ds)).map_err(|e| Error::io(path, e))
}

/// Parses dataset CSV text. With `num_classes = None` the class count is
/// taken as `max(label) + 1`. `origin` only labels error messages.
pub fn from_csv_str(
    text: &str,
    num_classes: Option<usize>,
    origin: &Path,
) -> Result<OrdinalDataset> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(origin, 1, "empty file"))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let dim = columns.len().saturating_sub(1);
    let header_ok = dim >= 1
        && columns.last() == Some(&"label")
        && columns[..dim]
            .iter()
            .enumerate()
            .all(|(j, c)| *c == format!("f{j}"));
    if !header_ok {
        return Err(Error::parse(origin, 1, "expected header `f0,...,f{D-1},label`"));
    }

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (line_no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != dim + 1 {
            return Err(Error::parse(
                origin,
                line_no,
                format!("expected {} fields, found {}", dim + 1, fields.len()),
            ));
        }
        for f in &fields[..dim] {
            let x: f64 = f
                .parse()
                .map_err(|_| Error::parse(origin, line_no, format!("bad feature value `{f}`")))?;
            if !x.is_finite() {
                return Err(Error::parse(origin, line_no, format!("non-finite feature `{f}`")));
            }
            features.push(x);
        }
        let label: usize = fields[dim]
            .parse()
            .map_err(|_| Error::parse(origin, line_no, format!("bad label `{}`", fields[dim])))?;
        if let Some(c) = num_classes {
            if label >= c {
                return Err(Error::parse(
                    origin,
                    line_no,
                    format!("label {label} out of range for {c} classes"),
                ));
            }
        }
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(Error::parse(origin, 2, "no data rows"));
    }
    let num_classes = num_classes.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1).max(2));
    OrdinalDataset::new(features, dim, labels, num_classes, 0)
        .map_err(|e| Error::parse(origin, 1, e.to_string()))
}

pub fn load_csv(path: impl AsRef<Path>, num_classes: Option<usize>) -> Result<OrdinalDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_csv_str(&text, num_classes, path)
}
