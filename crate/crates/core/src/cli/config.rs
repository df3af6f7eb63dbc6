//! Optional flat config file and option resolution.
//!
//! Precedence: command-line flag, then config file, then built-in default.
//!
//! ```toml
//! loss = "orcu"        # ce | ls | sce | orcu
//! t = 3.0
//! epsilon = 0.1
//! metric = "squared"   # squared | absolute | huber | exponential
//! huber_delta = 1.0
//! model = "linear"     # linear | mlp
//! hidden = 16
//! lr = 0.05
//! epochs = 200
//! batch_size = 64
//! reduction = "mean"   # mean | sum
//! seed = 0
//! bins = 15
//! ranges = 15
//! classes = 5
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::args::TrainOptions;
use super::{CliError, CliResult};
use crate::encoding::{DistanceMetric, DEFAULT_HUBER_DELTA, DEFAULT_SMOOTHING};
use crate::losses::{LossKind, Reduction, DEFAULT_T};
use crate::metrics::DEFAULT_BINS;
use crate::trainer::{
    ModelKind, TrainConfig, DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS, DEFAULT_LINEAR_LR, DEFAULT_MLP_LR,
};

pub const DEFAULT_HIDDEN: usize = 16;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub loss: Option<String>,
    pub t: Option<f64>,
    pub epsilon: Option<f64>,
    pub metric: Option<String>,
    pub huber_delta: Option<f64>,
    pub model: Option<String>,
    pub hidden: Option<usize>,
    pub lr: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub reduction: Option<String>,
    pub seed: Option<u64>,
    pub bins: Option<usize>,
    pub ranges: Option<usize>,
    pub classes: Option<usize>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved training setup shared by train, sweep-t and ablate.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub classes: Option<usize>,
    pub metric: DistanceMetric,
    pub huber_delta: f64,
    pub model: ModelKind,
    pub hidden: usize,
    pub seed: u64,
    pub bins: usize,
    pub ranges: usize,
    pub train: TrainConfig,
}

/// Loss flags as given on the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct LossFlags<'a> {
    pub loss: Option<&'a str>,
    pub t: Option<f64>,
    pub epsilon: Option<f64>,
}

fn pick<T: Clone>(flag: Option<T>, file: &Option<T>, default: T) -> T {
    flag.or_else(|| file.clone()).unwrap_or(default)
}

fn positive(name: &str, v: usize) -> CliResult<usize> {
    if v == 0 {
        Err(CliError::usage(format!("{name} must be at least 1")))
    } else {
        Ok(v)
    }
}

pub fn resolve(opts: &TrainOptions, loss_flags: LossFlags<'_>) -> CliResult<Resolved> {
    let file = match &opts.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };

    let huber_delta = pick(opts.huber_delta, &file.huber_delta, DEFAULT_HUBER_DELTA);
    let metric_name = pick(opts.metric.clone(), &file.metric, "squared".to_string());
    let metric = DistanceMetric::parse(&metric_name, huber_delta)?;

    let model = match pick(opts.model.clone(), &file.model, "linear".to_string()).as_str() {
        "linear" => ModelKind::Linear,
        "mlp" => ModelKind::Mlp,
        other => return Err(CliError::usage(format!("unknown model `{other}`"))),
    };
    let default_lr = match model {
        ModelKind::Linear => DEFAULT_LINEAR_LR,
        ModelKind::Mlp => DEFAULT_MLP_LR,
    };
    let reduction = match pick(opts.reduction.clone(), &file.reduction, "mean".to_string()).as_str() {
        "mean" => Reduction::Mean,
        "sum" => Reduction::Sum,
        other => return Err(CliError::usage(format!("unknown reduction `{other}`"))),
    };

    let t = pick(loss_flags.t, &file.t, DEFAULT_T);
    let epsilon = pick(loss_flags.epsilon, &file.epsilon, DEFAULT_SMOOTHING);
    let loss_name = loss_flags
        .loss
        .map(str::to_string)
        .or_else(|| file.loss.clone())
        .unwrap_or_else(|| "orcu".to_string());
    let loss = match loss_name.as_str() {
        "ce" => LossKind::Ce,
        "ls" => LossKind::Ls { epsilon },
        "sce" => LossKind::Sce { metric },
        "orcu" => LossKind::Orcu { metric, t },
        other => return Err(CliError::usage(format!("unknown loss `{other}`"))),
    };

    let seed = pick(opts.seed, &file.seed, 0);
    let classes = opts.classes.or(file.classes);
    if let Some(c) = classes {
        if c < 2 {
            return Err(CliError::usage(format!("need at least 2 classes, got {c}")));
        }
    }
    let train = TrainConfig {
        loss,
        learning_rate: pick(opts.lr, &file.lr, default_lr),
        epochs: positive("epochs", pick(opts.epochs, &file.epochs, DEFAULT_EPOCHS))?,
        batch_size: positive("batch_size", pick(opts.batch_size, &file.batch_size, DEFAULT_BATCH_SIZE))?,
        shuffle_seed: seed,
        reduction,
    };
    train.validate()?;

    Ok(Resolved {
        classes,
        metric,
        huber_delta,
        model,
        hidden: positive("hidden", pick(opts.hidden, &file.hidden, DEFAULT_HIDDEN))?,
        seed,
        bins: positive("bins", pick(opts.bins, &file.bins, DEFAULT_BINS))?,
        ranges: positive("ranges", pick(opts.ranges, &file.ranges, DEFAULT_BINS))?,
        train,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn opts() -> TrainOptions {
        TrainOptions {
            data: "d.csv".into(),
            out: "out".into(),
            ..TrainOptions::default()
        }
    }

    #[test]
    fn defaults() {
        let r = resolve(&opts(), LossFlags::default()).unwrap();
        assert_eq!(r.train.loss, LossKind::orcu_default());
        assert_eq!(r.train.learning_rate, DEFAULT_LINEAR_LR);
        assert_eq!((r.bins, r.ranges, r.seed), (15, 15, 0));
        assert_eq!(r.train.epochs, 200);
        assert_eq!(r.train.batch_size, 64);
    }

    #[test]
    fn flags_override_file_which_overrides_defaults() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "loss = \"ls\"\nepsilon = 0.2\nlr = 0.5\nepochs = 7\nmodel = \"mlp\"").unwrap();
        let mut o = opts();
        o.config = Some(file.path().to_path_buf());
        o.lr = Some(0.25);
        let r = resolve(&o, LossFlags::default()).unwrap();
        assert_eq!(r.train.loss, LossKind::Ls { epsilon: 0.2 });
        assert_eq!(r.train.learning_rate, 0.25);
        assert_eq!(r.train.epochs, 7);
        assert_eq!(r.model, ModelKind::Mlp);

        let r = resolve(&o, LossFlags { loss: Some("ce"), ..LossFlags::default() }).unwrap();
        assert_eq!(r.train.loss, LossKind::Ce);
    }

    #[test]
    fn bad_file_values_are_usage_errors() {
        for text in ["t = 0.0\n", "bogus = 1\n", "metric = \"cosine\"\n", "epochs = 0\n", "loss = \"x\"\n"] {
            let mut file = tempfile::NamedTempFile::new().unwrap();
            file.write_all(text.as_bytes()).unwrap();
            let mut o = opts();
            o.config = Some(file.path().to_path_buf());
            let err = resolve(&o, LossFlags::default()).unwrap_err();
            assert_eq!(err.code, 2, "{text}: {}", err.message);
        }
    }
}
