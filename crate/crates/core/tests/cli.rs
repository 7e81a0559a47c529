use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_milboost"))
        .args(args)
        .current_dir(dir)
        .env_remove("MILBOOST_THREADS")
        .output()
        .unwrap()
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = run(args, dir);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str], dir: &Path, code: i32) -> String {
    let out = run(args, dir);
    assert_eq!(out.status.code(), Some(code), "{args:?}");
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(
        err.lines().count(),
        1,
        "expected one error line, got {err:?}"
    );
    assert!(err.starts_with("milboost: error: "), "{err}");
    err
}

#[test]
fn realizable_pipeline_reaches_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(
        &[
            "synth",
            "--num-bags",
            "100",
            "--max-bag-size",
            "4",
            "--dimension",
            "2",
            "--seed",
            "11",
            "--out",
            "d.jsonl",
        ],
        p,
    );
    ok(
        &[
            "train",
            "--data",
            "d.jsonl",
            "--rounds",
            "200",
            "--model-out",
            "m.json",
            "--trace-out",
            "t.csv",
        ],
        p,
    );
    let report: Value =
        serde_json::from_str(&ok(&["eval", "--model", "m.json", "--data", "d.jsonl"], p)).unwrap();
    assert_eq!(report["bag_error"], 0.0);
    assert!(report["min_margin"].as_f64().unwrap() > 0.0);
    let trace = std::fs::read_to_string(p.join("t.csv")).unwrap();
    assert!(trace.starts_with("t,gamma,alpha,Z,rho,train_error,min_margin\n"));
}

#[test]
fn eval_is_recomputable_from_predict() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(
        &[
            "synth",
            "--num-bags",
            "80",
            "--noise",
            "0.2",
            "--regime",
            "homogeneous_dependent",
            "--seed",
            "5",
            "--out",
            "d.csv",
        ],
        p,
    );
    ok(
        &[
            "train",
            "--data",
            "d.csv",
            "--rounds",
            "15",
            "--model-out",
            "m.json",
        ],
        p,
    );
    let report: Value =
        serde_json::from_str(&ok(&["eval", "--model", "m.json", "--data", "d.csv"], p)).unwrap();
    let predictions = ok(&["predict", "--model", "m.json", "--data", "d.csv"], p);

    let data =
        milboost::io::load_dataset(p.join("d.csv"), milboost::io::DatasetFormat::Csv).unwrap();
    let mut lines = predictions.lines();
    assert_eq!(lines.next(), Some("bag_id,score,label"));
    let mut wrong = 0;
    let mut margins = Vec::new();
    for (line, bag) in lines.zip(data.bags()) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], bag.id);
        let score: f64 = fields[1].parse().unwrap();
        let label: f64 = fields[2].parse().unwrap();
        assert_eq!(label, if score >= 0.0 { 1.0 } else { -1.0 });
        if label != bag.label.sign() {
            wrong += 1;
        }
        margins.push(bag.label.sign() * score);
    }
    let bag_error = wrong as f64 / data.len() as f64;
    assert!((report["bag_error"].as_f64().unwrap() - bag_error).abs() < 1e-12);
    let min = margins.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = margins.iter().sum::<f64>() / margins.len() as f64;
    assert!((report["min_margin"].as_f64().unwrap() - min).abs() < 1e-12);
    assert!((report["mean_margin"].as_f64().unwrap() - mean).abs() < 1e-12);
    let model: Value =
        serde_json::from_str(&std::fs::read_to_string(p.join("m.json")).unwrap()).unwrap();
    assert_eq!(
        report["rounds"].as_u64().unwrap() as usize,
        model["terms"].as_array().unwrap().len()
    );
}

#[test]
fn constant_model_on_balanced_data() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(
        &[
            "synth",
            "--num-bags",
            "40",
            "--positive-rate",
            "0.5",
            "--seed",
            "2",
            "--out",
            "d.jsonl",
        ],
        p,
    );
    std::fs::write(
        p.join("m.json"),
        r#"{"format_version":1,"psi":"max","terms":[{"alpha":1.0,"hypothesis":{"kind":"bag_const","value":1}}]}"#,
    )
    .unwrap();
    let report: Value =
        serde_json::from_str(&ok(&["eval", "--model", "m.json", "--data", "d.jsonl"], p)).unwrap();
    assert_eq!(report["bag_error"], 0.5);
    assert_eq!(report["per_class_error"]["positive"], 0.0);
    assert_eq!(report["per_class_error"]["negative"], 1.0);
    assert_eq!(report["rounds"], 1);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(
        p.join("run.toml"),
        "[synth]\nnum_bags = 7\nseed = 3\nout = \"a.jsonl\"\n",
    )
    .unwrap();
    ok(&["--config", "run.toml", "synth"], p);
    ok(
        &[
            "--config",
            "run.toml",
            "synth",
            "--num-bags",
            "9",
            "--out",
            "b.jsonl",
        ],
        p,
    );
    let count = |f: &str| std::fs::read_to_string(p.join(f)).unwrap().lines().count();
    assert_eq!(count("a.jsonl"), 7);
    assert_eq!(count("b.jsonl"), 9);
}

#[test]
fn validation_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let err = fails(&["synth", "--regime", "sideways", "--out", "x.jsonl"], p, 2);
    assert!(err.contains("validation"));
    fails(
        &["train", "--data", "missing.jsonl", "--model-out", "m.json"],
        p,
        2,
    );
    fails(&["train", "--data", "missing.jsonl"], p, 2);
    fails(&["frobnicate"], p, 2);
    fails(&["train", "--rounds", "many"], p, 2);

    ok(
        &[
            "synth",
            "--dimension",
            "3",
            "--target-feature",
            "2",
            "--num-bags",
            "30",
            "--out",
            "d3.jsonl",
        ],
        p,
    );
    ok(
        &[
            "synth",
            "--dimension",
            "1",
            "--num-bags",
            "30",
            "--out",
            "d1.jsonl",
        ],
        p,
    );
    ok(
        &[
            "train",
            "--data",
            "d3.jsonl",
            "--rounds",
            "5",
            "--model-out",
            "m3.json",
        ],
        p,
    );
    let err = fails(&["eval", "--model", "m3.json", "--data", "d1.jsonl"], p, 2);
    assert!(err.contains("dimension"), "{err}");

    std::fs::write(
        p.join("bad.jsonl"),
        "{\"bag_id\":\"a\",\"label\":3,\"instances\":[[0.0]]}\n",
    )
    .unwrap();
    let err = fails(
        &["train", "--data", "bad.jsonl", "--model-out", "m.json"],
        p,
        2,
    );
    assert!(err.contains("label"), "{err}");
    fails(
        &[
            "train",
            "--data",
            "d1.jsonl",
            "--psi",
            "median",
            "--model-out",
            "m.json",
        ],
        p,
        2,
    );
    fails(
        &[
            "train",
            "--data",
            "d1.jsonl",
            "--booster",
            "adaboost_star",
            "--nu",
            "1.5",
            "--model-out",
            "m.json",
        ],
        p,
        2,
    );
}

#[test]
fn runtime_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    // Every instance lands on the negative side, so a positive rate of 1 is unreachable.
    let err = fails(
        &[
            "synth",
            "--positive-rate",
            "1",
            "--target-threshold",
            "1e9",
            "--num-bags",
            "5",
            "--out",
            "x.jsonl",
        ],
        p,
        1,
    );
    assert!(err.contains("rate unreachable"), "{err}");
}

#[test]
fn complexity_writes_results_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(
        &[
            "complexity",
            "--rs",
            "1,2",
            "--fresh-bags",
            "4",
            "--cover-eps",
            "0.5",
            "--fat-gammas",
            "0.3",
        ],
        dir.path(),
    );
    let mut lines = out.lines();
    assert_eq!(
        lines.next(),
        Some("class,r,pool_size,metric,param,value,seed")
    );
    let rows: Vec<&str> = lines.collect();
    assert!(rows
        .iter()
        .any(|l| l.starts_with("max_interval,2,") && l.contains(",vc,exact,")));
    assert!(rows.iter().any(|l| l.contains(",cov,0.5,")));
    assert!(rows.iter().any(|l| l.contains(",fat,0.3,")));
    fails(&["complexity", "--vc-cap", "13"], dir.path(), 2);
    fails(&["complexity", "--rs", "4,2"], dir.path(), 2);
}
