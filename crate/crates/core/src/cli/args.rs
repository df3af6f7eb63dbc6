use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::OUT_DIR_ENV;

fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be > 0, got {s}"))
    }
}

fn non_negative_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("must be >= 0, got {s}"))
    }
}

fn smoothing(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("must lie in [0, 1), got {s}"))
    }
}

fn positive_usize(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|_| format!("`{s}` is not a positive integer"))?;
    if v >= 1 {
        Ok(v)
    } else {
        Err("must be >= 1".into())
    }
}

fn class_count(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|_| format!("`{s}` is not an integer"))?;
    if v >= 2 {
        Ok(v)
    } else {
        Err(format!("need at least 2 classes, got {v}"))
    }
}

fn metric_name(s: &str) -> Result<String, String> {
    let lower = s.to_ascii_lowercase();
    match lower.as_str() {
        "squared" | "absolute" | "huber" | "exponential" => Ok(lower),
        _ => Err(format!(
            "unknown distance metric `{s}` (expected squared, absolute, huber or exponential)"
        )),
    }
}

#[derive(Debug, Parser)]
#[command(name = "orcu", version, about = "Calibrated ordinal regression toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an ordered-logit synthetic dataset (dataset.csv + manifest.json).
    Gen(GenArgs),
    /// Train one model and write report, curves, reliability bins, predictions and the model.
    Train(TrainArgs),
    /// Train one ORCU model per barrier temperature and compare validation calibration.
    SweepT(SweepArgs),
    /// Cross {sce, orcu} with every distance metric and report test calibration.
    Ablate(AblateArgs),
    /// Compute all metrics for a predictions CSV (`p0,...,p{C-1},label`).
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Number of samples.
    #[arg(long, default_value_t = 5000, value_parser = positive_usize)]
    pub n: usize,
    /// Feature dimension.
    #[arg(long, default_value_t = 10, value_parser = positive_usize)]
    pub dim: usize,
    /// Number of ordinal classes (>= 2).
    #[arg(long, default_value_t = 5, value_parser = class_count)]
    pub classes: usize,
    /// Scale of the logistic latent noise.
    #[arg(long, default_value_t = 0.5, value_parser = non_negative_f64)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    pub out: PathBuf,
}

/// Options shared by every command that trains models. Unset options fall
/// back to the config file, then to the built-in default shown here.
#[derive(Debug, Clone, Default, Args)]
pub struct TrainOptions {
    /// Dataset CSV (`f0,...,f{D-1},label`).
    #[arg(long)]
    pub data: PathBuf,
    /// Class count; inferred as max(label) + 1 when omitted.
    #[arg(long, value_parser = class_count)]
    pub classes: Option<usize>,
    /// Flat `key = value` config file (keys as in the long flags, `-` replaced by `_`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Distance metric for soft encoding: squared, absolute, huber, exponential [default: squared].
    #[arg(long, value_parser = metric_name)]
    pub metric: Option<String>,
    /// Huber transition point [default: 1.0].
    #[arg(long, value_parser = positive_f64)]
    pub huber_delta: Option<f64>,
    /// Model: linear or mlp [default: linear].
    #[arg(long, value_parser = ["linear", "mlp"])]
    pub model: Option<String>,
    /// Hidden units for the MLP [default: 16].
    #[arg(long, value_parser = positive_usize)]
    pub hidden: Option<usize>,
    /// Learning rate [default: 0.05 linear, 0.01 mlp].
    #[arg(long, value_parser = positive_f64)]
    pub lr: Option<f64>,
    /// Training epochs [default: 200].
    #[arg(long, value_parser = positive_usize)]
    pub epochs: Option<usize>,
    /// Mini-batch size [default: 64].
    #[arg(long, value_parser = positive_usize)]
    pub batch_size: Option<usize>,
    /// Batch reduction: mean or sum [default: mean].
    #[arg(long, value_parser = ["mean", "sum"])]
    pub reduction: Option<String>,
    /// Seed for initialization, shuffling and the 80/10/10 split [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Equal-width bins for ECE, SCE and reliability output [default: 15].
    #[arg(long, value_parser = positive_usize)]
    pub bins: Option<usize>,
    /// Equal-count ranges for ACE [default: 15].
    #[arg(long, value_parser = positive_usize)]
    pub ranges: Option<usize>,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: TrainOptions,
    /// Loss: ce, ls, sce (soft ordinal encoding only) or orcu [default: orcu].
    #[arg(long, value_parser = ["ce", "ls", "sce", "orcu"])]
    pub loss: Option<String>,
    /// Barrier temperature for orcu (> 0) [default: 3.0].
    #[arg(long, value_parser = positive_f64)]
    pub t: Option<f64>,
    /// Label-smoothing mass for ls, in [0, 1) [default: 0.1].
    #[arg(long, value_parser = smoothing)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: TrainOptions,
    /// Comma-separated temperatures.
    #[arg(long, value_delimiter = ',', value_parser = positive_f64, default_value = "1,3,5,7,10")]
    pub ts: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub common: TrainOptions,
    /// Barrier temperature for the orcu rows (> 0) [default: 3.0].
    #[arg(long, value_parser = positive_f64)]
    pub t: Option<f64>,
    /// Comma-separated distance metrics.
    #[arg(
        long = "metrics",
        value_delimiter = ',',
        value_parser = metric_name,
        default_value = "squared,absolute,huber,exponential"
    )]
    pub metric_list: Vec<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predictions CSV (`p0,...,p{C-1},label`); rows must sum to 1 within 1e-6.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Equal-width bins for ECE, SCE and reliability output.
    #[arg(long, default_value_t = 15, value_parser = positive_usize)]
    pub bins: usize,
    /// Equal-count ranges for ACE (clamped to the number of rows).
    #[arg(long, default_value_t = 15, value_parser = positive_usize)]
    pub ranges: usize,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    pub out: PathBuf,
}
