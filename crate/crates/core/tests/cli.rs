use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn orcu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orcu"))
        .args(args)
        .env_remove("ORCU_OUT_DIR")
        .output()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn assert_ok(o: &Output) {
    assert_eq!(o.status.code(), Some(0), "stderr: {}", stderr(o));
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Small dataset in `<tmp>/data/dataset.csv`.
fn small_dataset(tmp: &TempDir) -> std::path::PathBuf {
    let dir = tmp.path().join("data");
    assert_ok(&orcu(&["gen", "--n", "300", "--dim", "4", "--classes", "4", "--seed", "1", "--out", p(&dir)]));
    dir.join("dataset.csv")
}

#[test]
fn gen_writes_dataset_and_manifest_deterministically() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        assert_ok(&orcu(&["gen", "--n", "100", "--dim", "3", "--classes", "3", "--seed", "5", "--out", p(dir)]));
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names, ["dataset.csv", "manifest.json"]);
    for name in ["dataset.csv", "manifest.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
    }
    let csv = fs::read_to_string(a.join("dataset.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("f0,f1,f2,label"));
    assert_eq!(csv.lines().count(), 101);
    assert_eq!(read_json(&a.join("manifest.json"))["command"], "gen");
}

#[test]
fn usage_errors_exit_with_code_two() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let data = small_dataset(&tmp);
    let cases: Vec<Vec<&str>> = vec![
        vec!["gen", "--classes", "1", "--out", p(&out)],
        vec!["train", "--data", p(&data), "--t", "0", "--out", p(&out)],
        vec!["train", "--data", p(&data), "--epsilon", "1.5", "--out", p(&out)],
        vec!["train", "--data", "/nonexistent/data.csv", "--out", p(&out)],
        vec!["train", "--data", p(&data), "--metric", "cosine", "--out", p(&out)],
        vec!["sweep-t", "--data", p(&data), "--ts", "", "--out", p(&out)],
        vec!["ablate", "--data", p(&data), "--metrics", "squared,cosine", "--out", p(&out)],
        vec!["frobnicate"],
    ];
    for args in cases {
        let o = orcu(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty(), "{args:?} printed no diagnostic");
    }
}

#[test]
fn train_writes_all_artifacts_and_eval_reproduces_metrics() {
    let tmp = TempDir::new().unwrap();
    let data = small_dataset(&tmp);
    let out = tmp.path().join("train");
    let o = orcu(&[
        "train", "--data", p(&data), "--loss", "orcu", "--t", "3.0", "--metric", "squared",
        "--epochs", "5", "--out", p(&out),
    ]);
    assert_ok(&o);
    let stdout = String::from_utf8_lossy(&o.stdout);
    for key in ["accuracy", "mae", "qwk", "ece", "sce", "ace", "unimodal"] {
        assert!(stdout.lines().any(|l| l.starts_with(key)), "missing {key} in\n{stdout}");
    }
    for name in [
        "curve.csv", "reliability.csv", "reliability.json", "predictions.csv", "model.json",
        "report.json", "manifest.json",
    ] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["epoch_losses"].as_array().unwrap().len(), 5);
    assert_eq!(fs::read_to_string(out.join("curve.csv")).unwrap().lines().count(), 6);

    let eval_out = tmp.path().join("eval");
    let preds = out.join("predictions.csv");
    assert_ok(&orcu(&["eval", "--predictions", p(&preds), "--out", p(&eval_out)]));
    let metrics = read_json(&eval_out.join("metrics.json"));
    assert_eq!(metrics, report["metrics"]);
    assert_eq!(
        fs::read(eval_out.join("reliability.csv")).unwrap(),
        fs::read(out.join("reliability.csv")).unwrap()
    );
}

#[test]
fn train_supports_label_smoothing_and_mlp() {
    let tmp = TempDir::new().unwrap();
    let data = small_dataset(&tmp);
    let out = tmp.path().join("ls");
    assert_ok(&orcu(&[
        "train", "--data", p(&data), "--loss", "ls", "--epsilon", "0.1", "--model", "mlp",
        "--hidden", "4", "--epochs", "3", "--out", p(&out),
    ]));
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["config"]["loss"]["name"], "ls");
    assert_eq!(report["model"]["kind"], "mlp");
    assert_eq!(report["config"]["learning_rate"], 0.01);
}

#[test]
fn eval_names_the_offending_line() {
    let tmp = TempDir::new().unwrap();
    let preds = tmp.path().join("preds.csv");
    fs::write(&preds, "p0,p1,label\n0.5,0.5,0\n0.7,0.7,1\n").unwrap();
    let o = orcu(&["eval", "--predictions", p(&preds), "--out", p(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(":3:"), "{}", stderr(&o));
}

#[test]
fn sweep_reports_sorted_temperatures() {
    let tmp = TempDir::new().unwrap();
    let data = small_dataset(&tmp);
    let out = tmp.path().join("sweep");
    assert_ok(&orcu(&["sweep-t", "--data", p(&data), "--epochs", "3", "--out", p(&out)]));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "t,ece,sce,ace");
    let ts: Vec<f64> = lines[1..].iter().map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ts, [1.0, 3.0, 5.0, 7.0, 10.0]);
    let report = read_json(&out.join("sweep.json"));
    assert!(ts.contains(&report["argmin_t"].as_f64().unwrap()));

    let single = tmp.path().join("single");
    assert_ok(&orcu(&["sweep-t", "--data", p(&data), "--ts", "3", "--epochs", "2", "--out", p(&single)]));
    let report = read_json(&single.join("sweep.json"));
    assert_eq!(report["rows"].as_array().unwrap().len(), 1);
    assert_eq!(report["argmin_t"], 3.0);
    assert_eq!(report["argmin_unique"], true);
}

#[test]
fn ablate_crosses_losses_with_metrics() {
    let tmp = TempDir::new().unwrap();
    let data = small_dataset(&tmp);
    let out = tmp.path().join("ablate");
    assert_ok(&orcu(&["ablate", "--data", p(&data), "--epochs", "2", "--out", p(&out)]));
    let rows = read_json(&out.join("ablation.json"));
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 8);
    let defaults: Vec<_> = rows.iter().filter(|r| r["default_config"] == true).collect();
    assert_eq!(defaults.len(), 1);
    assert_eq!(defaults[0]["loss"], "orcu");
    assert_eq!(defaults[0]["metric"], "squared");
    assert_eq!(fs::read_to_string(out.join("ablation.csv")).unwrap().lines().count(), 9);
}

#[test]
fn help_lists_training_flags() {
    let o = orcu(&["train", "--help"]);
    assert_ok(&o);
    let text = String::from_utf8_lossy(&o.stdout);
    for flag in ["--data", "--loss", "--t", "--epsilon", "--metric", "--model", "--lr", "--epochs", "--seed", "--config"] {
        assert!(text.contains(flag), "help lacks {flag}");
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = TempDir::new().unwrap();
    let data = small_dataset(&tmp);
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "loss = \"ce\"\nepochs = 2\nlr = 0.2\n").unwrap();
    let out = tmp.path().join("o");
    assert_ok(&orcu(&["train", "--data", p(&data), "--config", p(&cfg), "--epochs", "4", "--out", p(&out)]));
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["config"]["loss"]["name"], "ce");
    assert_eq!(report["config"]["learning_rate"], 0.2);
    assert_eq!(report["epoch_losses"].as_array().unwrap().len(), 4);

    fs::write(&cfg, "bogus_key = 1\n").unwrap();
    let o = orcu(&["train", "--data", p(&data), "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_directory_comes_from_the_environment() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("from_env");
    let o = Command::new(env!("CARGO_BIN_EXE_orcu"))
        .args(["gen", "--n", "20", "--dim", "2", "--classes", "2"])
        .env("ORCU_OUT_DIR", &out)
        .output()
        .unwrap();
    assert_ok(&o);
    assert!(out.join("dataset.csv").is_file());
}
