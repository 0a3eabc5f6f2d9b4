use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn cic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = cic(args);
    assert!(
        out.status.success(),
        "cic {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// A config that keeps the network tiny so runs take milliseconds.
fn quick_config(dir: &Path) -> String {
    let path = dir.join("quick.json");
    fs::write(&path, r#"{"cic": {"hidden": [8], "epochs": 2, "batch_size": 32}}"#).unwrap();
    path.to_str().unwrap().to_string()
}

fn simulate(dir: &Path, system: &str, length: &str) -> String {
    let out = dir.join(format!("sim{system}"));
    ok(&["simulate", "--system", system, "--length", length, "--seed", "7", "--out", p(&out)]);
    out.join("data.csv").to_str().unwrap().to_string()
}

#[test]
fn simulate_writes_dataset_truth_and_provenance() {
    let tmp = TempDir::new().unwrap();
    let data = simulate(tmp.path(), "1", "300");
    let dir = Path::new(&data).parent().unwrap();
    let text = fs::read_to_string(&data).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,z"));
    assert_eq!(lines.count(), 300);
    let truth = fs::read_to_string(dir.join("truth_causal.csv")).unwrap();
    assert_eq!(truth.lines().nth(1), Some("x,0,1,0"));
    for f in ["truth_confounder.csv", "spec.json", "provenance.json"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let prov: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("provenance.json")).unwrap()).unwrap();
    assert_eq!(prov["config"]["seed"], 7);
}

#[test]
fn simulate_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for d in [&a, &b] {
        ok(&["simulate", "--system", "3", "--length", "200", "--seed", "3", "--out", p(d)]);
    }
    assert_eq!(fs::read(a.join("data.csv")).unwrap(), fs::read(b.join("data.csv")).unwrap());
}

#[test]
fn independent_system_has_empty_truth() {
    let tmp = TempDir::new().unwrap();
    let data = simulate(tmp.path(), "4", "100");
    let truth = fs::read_to_string(Path::new(&data).with_file_name("truth_causal.csv")).unwrap();
    for line in truth.lines().skip(1) {
        assert!(line.split(',').skip(1).all(|c| c == "0"), "{line}");
    }
}

#[test]
fn simulate_without_a_source_is_a_usage_error() {
    let out = cic(&["simulate", "--length", "100"]);
    assert_eq!(code(&out), 2);
    assert!(!out.stderr.is_empty());
}

#[test]
fn infer_writes_reports() {
    let tmp = TempDir::new().unwrap();
    let data = simulate(tmp.path(), "1", "300");
    let cfg = quick_config(tmp.path());
    let out = tmp.path().join("inf");
    ok(&[
        "infer", "--config", &cfg, "--data", &data, "--x", "x", "--y", "y", "--save-models", "--out", p(&out),
    ]);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    for dir in ["xy", "yx"] {
        let s = report[dir]["score"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&s));
    }
    assert_eq!(report["m"], 0.25);
    assert_eq!(report["M"], 0.75);
    let loss = fs::read_to_string(out.join("loss.csv")).unwrap();
    assert_eq!(loss.lines().next(), Some("epoch,loss_xy,loss_yx"));
    assert_eq!(loss.lines().count(), 3);
    assert!(fs::read_to_string(out.join("shared_series.csv")).unwrap().starts_with("t,shared1"));
    let blob = fs::read_to_string(out.join("model_xy.txt")).unwrap();
    cic_core::cic::CicModel::from_blob(&blob).unwrap();
}

#[test]
fn infer_rejects_identical_columns() {
    let tmp = TempDir::new().unwrap();
    let data = simulate(tmp.path(), "1", "100");
    let out = cic(&["infer", "--data", &data, "--x", "x", "--y", "x", "--out", p(tmp.path())]);
    assert_eq!(code(&out), 2);
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let data = simulate(tmp.path(), "1", "100");
    let cfg = tmp.path().join("bad.json");
    fs::write(&cfg, r#"{"cic": {"epochz": 3}}"#).unwrap();
    let out = cic(&["infer", "--config", p(&cfg), "--data", &data, "--x", "x", "--y", "y"]);
    assert_eq!(code(&out), 2);
}

fn read_scores(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn scan_with_each_method() {
    let tmp = TempDir::new().unwrap();
    let data = simulate(tmp.path(), "3", "400");
    let cfg = quick_config(tmp.path());
    for method in ["gc", "ccm", "cic"] {
        let out = tmp.path().join(method);
        ok(&["scan", "--config", &cfg, "--data", &data, "--method", method, "--out", p(&out)]);
        let rows = read_scores(&out.join("scores.csv"));
        assert_eq!(rows[0], ["", "x", "y", "z"]);
        let mut off = 0;
        for (i, row) in rows[1..].iter().enumerate() {
            for (j, cell) in row[1..].iter().enumerate() {
                if i == j {
                    assert_eq!(cell, "", "diagonal is left empty");
                } else {
                    let v: f64 = cell.parse().unwrap();
                    assert!((0.0..=1.0).contains(&v), "{method}: {v}");
                    off += 1;
                }
            }
        }
        assert_eq!(off, 6);
        assert!(out.join("verdicts.csv").exists());
        assert!(out.join("pairs.csv").exists());
        assert_eq!(out.join("confounders.csv").exists(), method == "cic");
    }
}

#[test]
fn scan_rejects_unknown_method() {
    let tmp = TempDir::new().unwrap();
    let data = simulate(tmp.path(), "1", "100");
    let out = cic(&["scan", "--data", &data, "--method", "transfer-entropy"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn scan_is_identical_across_job_counts() {
    let tmp = TempDir::new().unwrap();
    let data = simulate(tmp.path(), "3", "300");
    let cfg = quick_config(tmp.path());
    let mut outputs = Vec::new();
    for jobs in ["1", "4", "4"] {
        let out = tmp.path().join(format!("scan{}", outputs.len()));
        ok(&["scan", "--config", &cfg, "--data", &data, "--jobs", jobs, "--seed", "5", "--out", p(&out)]);
        outputs.push(fs::read(out.join("scores.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
}

#[test]
fn strength_sweep_has_one_row_per_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = quick_config(tmp.path());
    let out = tmp.path().join("sweep");
    ok(&[
        "sweep", "--config", &cfg, "--system", "3", "--param", "strength", "--from", "0", "--to", "0.6", "--steps", "7",
        "--repeats", "3", "--length", "200", "--out", p(&out),
    ]);
    let text = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("param,value,repeat,seed,cic_xy,cic_yx,verdict_xy,verdict_yx,confounder,cc_z")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 21);
    let seeds: std::collections::BTreeSet<&str> = rows.iter().map(|r| r.split(',').nth(3).unwrap()).collect();
    assert_eq!(seeds.len(), 21);
}

#[test]
fn sweep_with_empty_range_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let out = cic(&[
        "sweep", "--system", "1", "--param", "noise", "--from", "0.001", "--to", "0.01", "--steps", "0", "--out",
        p(tmp.path()),
    ]);
    assert_eq!(code(&out), 2);
    let out = cic(&["sweep", "--system", "1", "--param", "noise", "--out", p(tmp.path())]);
    assert_eq!(code(&out), 2);
}

fn write_matrix(path: &Path, names: &[&str], cells: &[&[&str]]) {
    let mut s = String::new();
    s.push(',');
    s.push_str(&names.join(","));
    s.push('\n');
    for (n, row) in names.iter().zip(cells) {
        s.push_str(n);
        for c in *row {
            s.push(',');
            s.push_str(c);
        }
        s.push('\n');
    }
    fs::write(path, s).unwrap();
}

#[test]
fn evaluate_perfect_scores() {
    let tmp = TempDir::new().unwrap();
    let names = ["a", "b", "c"];
    let truth = tmp.path().join("truth.csv");
    let scores = tmp.path().join("scores.csv");
    write_matrix(&truth, &names, &[&["0", "1", "0"], &["0", "0", "1"], &["0", "0", "0"]]);
    write_matrix(&scores, &names, &[&["", "0.9", "0.2"], &["0.1", "", "0.8"], &["0.3", "0.15", ""]]);
    let out = tmp.path().join("eval");
    ok(&["evaluate", "--scores", p(&scores), "--truth", p(&truth), "--out", p(&out)]);
    let metrics: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["causal"]["auroc"], 1.0);
    assert_eq!(metrics["causal"]["threshold_rule"], "quantile:0.65");
    assert_eq!(metrics["causal"]["pairs"], 6);
    let roc = fs::read_to_string(out.join("roc.csv")).unwrap();
    assert_eq!(roc.lines().next(), Some("fpr,tpr,threshold"));
}

#[test]
fn evaluate_with_fixed_threshold() {
    let tmp = TempDir::new().unwrap();
    let names = ["a", "b"];
    let truth = tmp.path().join("truth.csv");
    let scores = tmp.path().join("scores.csv");
    write_matrix(&truth, &names, &[&["0", "1"], &["0", "0"]]);
    write_matrix(&scores, &names, &[&["", "0.9"], &["0.1", ""]]);
    let out = tmp.path().join("eval");
    ok(&["evaluate", "--scores", p(&scores), "--truth", p(&truth), "--threshold", "fixed:0.5", "--out", p(&out)]);
    let metrics: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["causal"]["threshold"], 0.5);
    assert_eq!(metrics["causal"]["accuracy"], 1.0);
    assert_eq!(metrics["causal"]["precision"], 1.0);
    let bad = cic(&["evaluate", "--scores", p(&scores), "--truth", p(&truth), "--threshold", "top:3"]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn evaluate_names_mismatched_labels() {
    let tmp = TempDir::new().unwrap();
    let truth = tmp.path().join("truth.csv");
    let scores = tmp.path().join("scores.csv");
    write_matrix(&truth, &["a", "q"], &[&["0", "1"], &["0", "0"]]);
    write_matrix(&scores, &["a", "b"], &[&["", "0.9"], &["0.1", ""]]);
    let out = cic(&["evaluate", "--scores", p(&scores), "--truth", p(&truth), "--out", p(tmp.path())]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains('b') && err.contains('q'), "{err}");
}

#[test]
fn gradcheck_passes() {
    let out = ok(&["gradcheck", "--seed", "3"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("max relative error"));
}
