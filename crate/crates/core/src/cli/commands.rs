use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use super::args::{AblateArgs, Command, EvalArgs, GenArgs, SweepArgs, TrainArgs, TrainOptions};
use super::config::{resolve, LossFlags, Resolved};
use super::{CliError, CliResult, OutputDir};
use crate::data::{self, GeneratorParams, OrdinalDataset, SplitSpec};
use crate::encoding::DistanceMetric;
use crate::error::Error;
use crate::losses::{LossKind, DEFAULT_T};
use crate::metrics::{
    bins_to_csv, bins_to_json, format_f64, predictions_from_csv, predictions_to_csv,
    reliability_bins, MetricReport,
};
use crate::trainer::{
    evaluate_with, init_model, train, Evaluation, Model, ModelKind, ModelSpec, TrainConfig,
    TrainReport,
};

/// `println!` that ignores a closed stdout.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

/// Row-sum tolerance for externally produced prediction files.
const PREDICTION_FILE_TOLERANCE: f64 = 1e-6;

pub fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Gen(args) => cmd_gen(&args),
        Command::Train(args) => cmd_train(&args),
        Command::SweepT(args) => cmd_sweep_t(&args),
        Command::Ablate(args) => cmd_ablate(&args),
        Command::Eval(args) => cmd_eval(&args),
    }
}

/// Reading inputs: missing or malformed files are usage errors.
fn input_error(e: Error) -> CliError {
    match e {
        Error::Io { .. } => CliError::usage(e),
        other => other.into(),
    }
}

fn cmd_gen(args: &GenArgs) -> CliResult<()> {
    let params = GeneratorParams {
        n: args.n,
        dim: args.dim,
        num_classes: args.classes,
        noise_scale: args.noise,
        seed: args.seed,
    };
    let ds = data::generate_with_latent(params)?.dataset;
    let mut out = OutputDir::create(&args.out)?;
    out.write("dataset.csv", &data::to_csv_string(&ds))?;
    out.finish("gen", json!({ "generator": params }), json!({ "seed": args.seed }))?;
    say!(
        "wrote {} rows x {} features, {} classes (counts {:?}) to {}",
        ds.len(),
        ds.dim(),
        ds.num_classes(),
        ds.class_counts(),
        args.out.display()
    );
    Ok(())
}

struct Prepared {
    resolved: Resolved,
    split: SplitSpec,
    train: OrdinalDataset,
    val: OrdinalDataset,
    test: OrdinalDataset,
}

impl Prepared {
    fn load(opts: &TrainOptions, loss_flags: LossFlags<'_>) -> CliResult<Self> {
        let resolved = resolve(opts, loss_flags)?;
        let ds = data::load_csv(&opts.data, resolved.classes).map_err(input_error)?;
        let split = SplitSpec::new(0.8, 0.1, 0.1, resolved.seed)?;
        let (train, val, test) = data::split(&ds, &split)?;
        Ok(Prepared {
            resolved,
            split,
            train,
            val,
            test,
        })
    }

    fn model_spec(&self) -> ModelSpec {
        let (d, c, seed) = (self.train.dim(), self.train.num_classes(), self.resolved.seed);
        match self.resolved.model {
            ModelKind::Linear => ModelSpec::linear(d, c, seed),
            ModelKind::Mlp => ModelSpec::mlp(d, self.resolved.hidden, c, seed),
        }
    }

    fn config_with(&self, loss: LossKind) -> TrainConfig {
        TrainConfig {
            loss,
            ..self.resolved.train
        }
    }

    fn fit(&self, cfg: &TrainConfig) -> CliResult<(Model, crate::trainer::TrainHistory)> {
        let model = init_model(self.model_spec())?;
        Ok(train(model, &self.train, cfg)?)
    }

    fn evaluate(&self, model: &Model, ds: &OrdinalDataset) -> CliResult<Evaluation> {
        Ok(evaluate_with(model, ds, self.resolved.bins, self.resolved.ranges)?)
    }

    fn manifest_config(&self, data: &Path, extra: serde_json::Value) -> serde_json::Value {
        json!({
            "data": data.display().to_string(),
            "num_classes": self.train.num_classes(),
            "split": self.split,
            "model": self.model_spec(),
            "train": self.resolved.train,
            "bins": self.resolved.bins,
            "ranges": self.resolved.ranges,
            "extra": extra,
        })
    }

    fn seeds(&self) -> serde_json::Value {
        json!({ "init": self.resolved.seed, "shuffle": self.resolved.seed, "split": self.split.seed })
    }
}

fn print_metrics(m: &MetricReport) {
    say!("accuracy          {}", m.accuracy);
    say!("mae               {}", m.mae);
    say!("qwk               {}", m.qwk);
    say!("ece               {}", m.ece);
    say!("sce               {}", m.sce);
    say!("ace               {}", m.ace);
    say!("unimodal          {}", m.unimodal);
    say!("unimodal_at_mode  {}", m.unimodal_at_mode);
}

fn cmd_train(args: &TrainArgs) -> CliResult<()> {
    let flags = LossFlags {
        loss: args.loss.as_deref(),
        t: args.t,
        epsilon: args.epsilon,
    };
    let prep = Prepared::load(&args.common, flags)?;
    let cfg = prep.resolved.train;
    let (model, history) = prep.fit(&cfg)?;
    let preds = model.predict(&prep.test)?;
    let eval = prep.evaluate(&model, &prep.test)?;

    let mut out = OutputDir::create(&args.common.out)?;
    out.write("curve.csv", &history.to_csv())?;
    out.write("reliability.csv", &bins_to_csv(&eval.bins))?;
    out.write("reliability.json", &bins_to_json(&eval.bins))?;
    out.write("predictions.csv", &predictions_to_csv(&preds))?;
    out.write_json("model.json", &model)?;
    let report = TrainReport::new(*model.spec(), cfg, history, eval);
    out.write_json("report.json", &report)?;
    out.finish(
        "train",
        prep.manifest_config(&args.common.data, json!({})),
        prep.seeds(),
    )?;

    say!("loss {} on {} test rows", cfg.loss.label(), prep.test.len());
    print_metrics(&report.metrics);
    Ok(())
}

#[derive(Debug, Serialize)]
struct SweepRow {
    t: f64,
    ece: f64,
    sce: f64,
    ace: f64,
}

#[derive(Debug, Serialize)]
struct SweepReport {
    metric: DistanceMetric,
    /// Metrics are measured on the validation split.
    split: &'static str,
    rows: Vec<SweepRow>,
    argmin_t: f64,
    argmin_ece: f64,
    argmin_unique: bool,
}

/// Index of the smallest ECE (first on ties) and whether it is strictly smallest.
fn argmin_ece(rows: &[SweepRow]) -> (usize, bool) {
    let mut best = 0;
    for (i, r) in rows.iter().enumerate().skip(1) {
        if r.ece < rows[best].ece {
            best = i;
        }
    }
    let unique = rows
        .iter()
        .enumerate()
        .all(|(i, r)| i == best || r.ece > rows[best].ece);
    (best, unique)
}

fn cmd_sweep_t(args: &SweepArgs) -> CliResult<()> {
    let mut ts = args.ts.clone();
    if ts.is_empty() {
        return Err(CliError::usage("empty temperature list"));
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let prep = Prepared::load(&args.common, LossFlags::default())?;
    let metric = prep.resolved.metric;

    let mut rows = Vec::with_capacity(ts.len());
    for &t in &ts {
        let cfg = prep.config_with(LossKind::Orcu { metric, t });
        let (model, _) = prep.fit(&cfg)?;
        let m = prep.evaluate(&model, &prep.val)?.metrics;
        rows.push(SweepRow {
            t,
            ece: m.ece,
            sce: m.sce,
            ace: m.ace,
        });
    }
    let (best, unique) = argmin_ece(&rows);
    let report = SweepReport {
        metric,
        split: "val",
        argmin_t: rows[best].t,
        argmin_ece: rows[best].ece,
        argmin_unique: unique,
        rows,
    };

    let mut csv = String::from("t,ece,sce,ace\n");
    for r in &report.rows {
        let _ = writeln!(csv, "{},{},{},{}", format_f64(r.t), format_f64(r.ece), format_f64(r.sce), format_f64(r.ace));
    }
    let mut out = OutputDir::create(&args.common.out)?;
    out.write("sweep.csv", &csv)?;
    out.write_json("sweep.json", &report)?;
    out.finish(
        "sweep-t",
        prep.manifest_config(&args.common.data, json!({ "ts": ts })),
        prep.seeds(),
    )?;

    say!("{:>8}  {:>10}  {:>10}  {:>10}", "t", "ece", "sce", "ace");
    for r in &report.rows {
        say!("{:>8}  {:>10.6}  {:>10.6}  {:>10.6}", r.t, r.ece, r.sce, r.ace);
    }
    say!(
        "argmin ECE at t = {}{}",
        report.argmin_t,
        if unique { "" } else { " (tied)" }
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct AblationRow {
    loss: &'static str,
    metric: &'static str,
    sce: f64,
    ace: f64,
    ece: f64,
    unimodal: f64,
    unimodal_at_mode: f64,
    accuracy: f64,
    /// ORCU with the squared metric, the default configuration.
    default_config: bool,
}

fn cmd_ablate(args: &AblateArgs) -> CliResult<()> {
    let prep = Prepared::load(&args.common, LossFlags::default())?;
    let t = args.t.unwrap_or(DEFAULT_T);
    let huber_delta = prep.resolved.huber_delta;
    let metrics = args
        .metric_list
        .iter()
        .map(|name| DistanceMetric::parse(name, huber_delta))
        .collect::<crate::Result<Vec<_>>>()?;
    if metrics.is_empty() {
        return Err(CliError::usage("empty metric list"));
    }

    let mut rows = Vec::new();
    for (loss_name, is_orcu) in [("sce", false), ("orcu", true)] {
        for &metric in &metrics {
            let loss = if is_orcu {
                LossKind::Orcu { metric, t }
            } else {
                LossKind::Sce { metric }
            };
            let (model, _) = prep.fit(&prep.config_with(loss))?;
            let m = prep.evaluate(&model, &prep.test)?.metrics;
            rows.push(AblationRow {
                loss: loss_name,
                metric: metric.name(),
                sce: m.sce,
                ace: m.ace,
                ece: m.ece,
                unimodal: m.unimodal,
                unimodal_at_mode: m.unimodal_at_mode,
                accuracy: m.accuracy,
                default_config: is_orcu && metric == DistanceMetric::Squared,
            });
        }
    }

    let mut csv = String::from("loss,metric,sce,ace,ece,unimodal,unimodal_at_mode,accuracy,default_config\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.loss,
            r.metric,
            format_f64(r.sce),
            format_f64(r.ace),
            format_f64(r.ece),
            format_f64(r.unimodal),
            format_f64(r.unimodal_at_mode),
            format_f64(r.accuracy),
            r.default_config
        );
    }
    let mut out = OutputDir::create(&args.common.out)?;
    out.write("ablation.csv", &csv)?;
    out.write_json("ablation.json", &rows)?;
    out.finish(
        "ablate",
        prep.manifest_config(&args.common.data, json!({ "t": t, "metrics": args.metric_list })),
        prep.seeds(),
    )?;

    say!(
        "{:<5} {:<12} {:>9} {:>9} {:>9} {:>9}",
        "loss", "metric", "sce", "ace", "ece", "unimodal"
    );
    for r in &rows {
        say!(
            "{:<5} {:<12} {:>9.5} {:>9.5} {:>9.5} {:>9.4}{}",
            r.loss,
            r.metric,
            r.sce,
            r.ace,
            r.ece,
            r.unimodal,
            if r.default_config { "  (default)" } else { "" }
        );
    }
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.predictions).map_err(|e| {
        CliError::usage(format!("cannot read {}: {e}", args.predictions.display()))
    })?;
    let preds = predictions_from_csv(&text, PREDICTION_FILE_TOLERANCE, &args.predictions)?;
    let metrics = MetricReport::compute(&preds, args.bins, args.ranges)?;
    let bins = reliability_bins(&preds, args.bins)?;

    let mut out = OutputDir::create(&args.out)?;
    out.write_json("metrics.json", &metrics)?;
    out.write("reliability.csv", &bins_to_csv(&bins))?;
    out.write("reliability.json", &bins_to_json(&bins))?;
    out.finish(
        "eval",
        json!({
            "predictions": args.predictions.display().to_string(),
            "bins": args.bins,
            "ranges": args.ranges,
        }),
        json!({}),
    )?;

    say!("{} rows, {} classes", preds.len(), preds.num_classes());
    print_metrics(&metrics);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmin_reports_ties() {
        let row = |t, ece| SweepRow { t, ece, sce: 0.0, ace: 0.0 };
        assert_eq!(argmin_ece(&[row(1.0, 0.3), row(3.0, 0.1), row(5.0, 0.2)]), (1, true));
        assert_eq!(argmin_ece(&[row(1.0, 0.1), row(3.0, 0.1)]), (0, false));
        assert_eq!(argmin_ece(&[row(1.0, 0.4)]), (0, true));
    }
}
