use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use specsel::data::write_csv;
use specsel::formats::{import_model, read_json, read_trace, SplitManifest};
use specsel_core::linalg::Matrix;
use specsel_core::synthetic::Planted;
use specsel_core::{classify, Dataset, Decision};

fn planted(per_class: usize) -> Dataset {
    Planted {
        per_class: vec![per_class; 3],
        n_vars: 10,
        signal_cols: vec![2, 7],
        class_means: vec![vec![0.0, 8.0], vec![4.0, 0.0], vec![8.0, 4.0]],
        class_factors: vec![
            Matrix::from_row_major(2, 2, vec![1.0, 0.0, 0.6, 0.8]),
            Matrix::from_row_major(2, 2, vec![0.8, 0.0, -0.4, 0.6928]),
            Matrix::from_row_major(2, 2, vec![0.9, 0.0, 0.0, 0.9]),
        ],
        noise_mean: 5.0,
        noise_sd: 2.0,
    }
    .generate(5)
    .unwrap()
}

fn csv_file(dir: &Path, d: &Dataset) -> PathBuf {
    let path = dir.join("data.csv");
    write_csv(d, "class", fs::File::create(&path).unwrap()).unwrap();
    path
}

fn specsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specsel")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn evaluate_writes_consistent_report() {
    let tmp = tempfile::tempdir().unwrap();
    let d = planted(30);
    let data = csv_file(tmp.path(), &d);
    let out = tmp.path().join("out");
    let o = specsel(&["evaluate", "--data", s(&data), "--splits", "4", "--master-seed", "3", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let splits = report["splits"].as_array().unwrap();
    let seeds: Vec<u64> = splits.iter().map(|s| s["seed"].as_u64().unwrap()).collect();
    assert_eq!(seeds, vec![3, 2, 1, 0]);
    let rates: Vec<f64> = splits.iter().map(|s| s["misclassification"].as_f64().unwrap()).collect();
    let mean = rates.iter().sum::<f64>() / 4.0;
    let sd = (rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / 3.0).sqrt();
    assert!((report["summary"]["mean_misclassification"].as_f64().unwrap() - mean).abs() < 1e-12);
    assert!((report["summary"]["sd_misclassification"].as_f64().unwrap() - sd).abs() < 1e-12);

    for (split, &seed) in splits.iter().zip(&seeds) {
        let manifest: SplitManifest = read_json(&out.join(format!("splits/{seed}/manifest.json"))).unwrap();
        let mut unlabeled = [0usize; 3];
        for &r in &manifest.unlabeled_rows {
            unlabeled[d.labels().unwrap()[r]] += 1;
        }
        let rows: Vec<usize> = split["confusion"]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| r.as_array().unwrap().iter().map(|c| c.as_u64().unwrap() as usize).sum())
            .collect();
        assert_eq!(rows, unlabeled);
        let trace = read_trace(fs::read(out.join(split["trace_path"].as_str().unwrap())).unwrap().as_slice()).unwrap();
        assert_eq!(trace[0].iteration, 1);
        let accepted: Vec<f64> = trace.iter().filter(|t| t.decision == Decision::Accepted).filter_map(|t| t.var_id).collect();
        assert!(!accepted.is_empty());
    }

    let hist = fs::read_to_string(out.join("hist.csv")).unwrap();
    assert_eq!(hist.lines().count(), 11);
    assert!(hist.starts_with("var_id,count\n"));
    let confusion = fs::read_to_string(out.join("confusion.csv")).unwrap();
    assert_eq!(confusion.lines().count(), 10);
}

#[test]
fn updating_switch_keeps_split_membership() {
    let tmp = tempfile::tempdir().unwrap();
    let data = csv_file(tmp.path(), &planted(20));
    for mode in ["on", "off"] {
        let out = tmp.path().join(mode);
        let o = specsel(&["evaluate", "--data", s(&data), "--splits", "2", "--updating", mode, "--out", s(&out)]);
        assert!(o.status.success());
    }
    for seed in [0, 1] {
        let a = fs::read(tmp.path().join(format!("on/splits/{seed}/manifest.json"))).unwrap();
        let b = fs::read(tmp.path().join(format!("off/splits/{seed}/manifest.json"))).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn fit_exports_model_and_replays_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let d = planted(25);
    let data = csv_file(tmp.path(), &d);
    let first = tmp.path().join("first");
    let o = specsel(&["fit", "--data", s(&data), "--master-seed", "11", "--strategy", "greedy", "--out", s(&first)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["model.json", "trace.jsonl", "manifest.json", "record.json"] {
        assert!(first.join(f).exists(), "{f} missing");
    }
    let (model, names) = import_model(&first.join("model.json")).unwrap();
    assert_eq!(names, d.class_names());
    let mut cols = model.cols.clone();
    cols.sort_unstable();
    assert_eq!(cols, vec![2, 7]);
    let post = classify(&model, &d);
    let errors = post.labels.iter().zip(d.labels().unwrap()).filter(|(a, b)| a != b).count();
    assert!(errors <= 2);

    let second = tmp.path().join("second");
    let manifest = first.join("manifest.json");
    let o = specsel(&["fit", "--data", s(&data), "--manifest", s(&manifest), "--strategy", "greedy", "--out", s(&second)]);
    assert!(o.status.success());
    assert_eq!(fs::read(first.join("trace.jsonl")).unwrap(), fs::read(second.join("trace.jsonl")).unwrap());
    assert_eq!(fs::read(first.join("model.json")).unwrap(), fs::read(second.join("model.json")).unwrap());
}

#[test]
fn merge_flag_relabels_classes() {
    let tmp = tempfile::tempdir().unwrap();
    let data = csv_file(tmp.path(), &planted(20));
    let out = tmp.path().join("m");
    let o = specsel(&["evaluate", "--data", s(&data), "--splits", "1", "--merge-classes", "class2=rest,class3=rest", "--out", s(&out)]);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["dataset"]["class_names"], serde_json::json!(["class1", "rest"]));
    assert_eq!(report["dataset"]["class_sizes"], serde_json::json!([20, 40]));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let data = csv_file(tmp.path(), &planted(10));
    let out = tmp.path().join("x");
    let code = |args: &[&str]| specsel(args).status.code().unwrap();

    assert_eq!(code(&["evaluate", "--data", "/nonexistent.csv", "--out", s(&out)]), 2);
    assert_eq!(code(&["evaluate", "--data", s(&data), "--label-col", "nope", "--out", s(&out)]), 2);
    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "1,2,class\n0.5,abc,a\n").unwrap();
    assert_eq!(code(&["evaluate", "--data", s(&bad), "--out", s(&out)]), 2);
    assert_eq!(code(&["evaluate", "--data", s(&data), "--train-frac", "0.05", "--out", s(&out)]), 2);

    assert_eq!(code(&["evaluate", "--data", s(&data), "--strategy", "sideways", "--out", s(&out)]), 3);
    assert_eq!(code(&["evaluate", "--data", s(&data), "--train-frac", "1.5", "--out", s(&out)]), 3);
    assert_eq!(code(&["evaluate", "--data", s(&data), "--splits", "0", "--out", s(&out)]), 3);
    assert_eq!(code(&["evaluate", "--data", s(&data), "--merge-classes", "class1", "--out", s(&out)]), 3);
    assert_eq!(code(&["evaluate", "--data", s(&data), "--merge-classes", "goat=x", "--out", s(&out)]), 3);
    assert_eq!(code(&["evaluate", "--data", s(&data), "--aggregate", "50", "--out", s(&out)]), 3);
    assert_eq!(code(&["aggregate-sweep", "--data", s(&data), "--out", s(&out)]), 3);
    assert_eq!(code(&["frobnicate"]), 3);
    assert_eq!(code(&["--help"]), 0);

    assert_eq!(code(&["evaluate", "--data", s(&data), "--splits", "2", "--min-evidence", "inf", "--out", s(&out)]), 0);
    // more selected variables than labeled rows
    let tiny = tmp.path().join("tiny.csv");
    let mut text = String::from("1,2,3,4,5,6,class\n");
    for i in 0..8 {
        let g = i % 2;
        let row: Vec<String> = (0..6).map(|j| format!("{}", 10.0 * g as f64 * (j % 3 + 1) as f64 + ((i * 7 + j * 3) % 5) as f64 * 0.1)).collect();
        text.push_str(&format!("{},c{g}\n", row.join(",")));
    }
    fs::write(&tiny, text).unwrap();
    assert_eq!(code(&["evaluate", "--data", s(&tiny), "--splits", "3", "--updating", "off", "--out", s(&out)]), 0);
}
