//! End-to-end runs of the command-line tool.

use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

use dataoob::cli::{run, EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME};

fn run_in(out: &Path, args: &[&str]) -> i32 {
    let mut argv = vec!["dataoob".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.extend(["--out".to_string(), out.display().to_string()]);
    run(argv)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn value_writes_one_row_per_point_and_records_b() {
    let dir = tempfile::tempdir().unwrap();
    let code = run_in(dir.path(), &["value", "--synthetic", "--n", "1000", "--seed", "3"]);
    assert_eq!(code, EXIT_OK);
    let rows = csv_rows(&dir.path().join("values.csv"));
    assert_eq!(rows.len(), 1000);
    assert!(rows.iter().all(|r| r[1] == "dataoob" && r[5] == "0"));
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["config"]["b"], 800);
    assert_eq!(m["dataset"]["n_train"], 1000);
    assert!(m["diagnostics"]["order_consistency"]["violations"] == 0);
}

#[test]
fn every_output_embeds_the_manifest_hash() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["detect", "--synthetic", "--n", "200", "--b", "100"]), EXIT_OK);
    let hash = json(&dir.path().join("manifest.json"))["manifest_sha256"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);
    for entry in fs::read_dir(dir.path()).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        if path.extension().unwrap() == "csv" {
            assert_eq!(text.lines().next().unwrap(), format!("# manifest_sha256={hash}"));
        } else {
            assert_eq!(json(&path)["manifest_sha256"], hash.as_str(), "{}", path.display());
        }
    }
}

#[test]
fn same_config_twice_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["value", "--synthetic", "--n", "300", "--b", "50", "--seed", "9"];
    assert_eq!(run_in(a.path(), &args), EXIT_OK);
    assert_eq!(run_in(b.path(), &args), EXIT_OK);
    for f in ["values.csv", "manifest.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(run_in(p, &["value", "--synthetic", "--method", "ame", "--k", "5"]), EXIT_CONFIG);
    assert_eq!(run_in(p, &["value", "--synthetic", "--no-such-flag"]), EXIT_CONFIG);
    assert_eq!(run_in(p, &["value"]), EXIT_CONFIG);
    assert_eq!(run_in(p, &["value", "--synthetic", "--csv", "x.csv"]), EXIT_CONFIG);
    assert_eq!(run_in(p, &["value", "--synthetic", "--method", "nope"]), EXIT_CONFIG);
    assert_eq!(run_in(p, &["value", "--synthetic", "--b", "100", "--method", "knn-shapley"]), EXIT_CONFIG);
    assert!(!p.join("manifest.json").exists());
}

#[test]
fn binary_reports_errors_on_stderr() {
    let out = Command::new(env!("CARGO_BIN_EXE_dataoob"))
        .args(["value", "--synthetic", "--method", "ame", "--k", "5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--k does not apply to --method ame"));

    let out = Command::new(env!("CARGO_BIN_EXE_dataoob")).args(["value", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
}

#[test]
fn detect_without_flips_is_an_empty_truth_error() {
    let dir = tempfile::tempdir().unwrap();
    let code = run_in(
        dir.path(),
        &["detect", "--synthetic", "--n", "100", "--b", "50", "--corruption-rate", "0"],
    );
    assert_eq!(code, EXIT_RUNTIME);
}

#[test]
fn detect_reproduces_golden_f1() {
    let dir = tempfile::tempdir().unwrap();
    let code = run_in(dir.path(), &["detect", "--synthetic", "--n", "500", "--b", "400", "--seed", "7"]);
    assert_eq!(code, EXIT_OK);
    let got = json(&dir.path().join("detection.json"));
    let golden = json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/detect_n500_b400_seed7.json"));
    for key in ["f1", "precision", "recall", "predicted", "auprc", "manifest_sha256"] {
        assert_eq!(got[key], golden[key], "{key}");
    }
    let flipped = csv_rows(&dir.path().join("corruption.csv"));
    assert_eq!(flipped.len(), 50);
    let pr = csv_rows(&dir.path().join("pr_curve.csv"));
    assert_eq!(pr.len(), 500);
    assert_eq!(pr.last().unwrap()[3], "1");
}

#[test]
fn removal_respects_stride_and_starts_level() {
    let dir = tempfile::tempdir().unwrap();
    let code = run_in(
        dir.path(),
        &["removal", "--synthetic", "--n", "200", "--test-size", "300", "--b", "100", "--stride", "0.25"],
    );
    assert_eq!(code, EXIT_OK);
    let rows = csv_rows(&dir.path().join("removal.csv"));
    let fractions: Vec<&str> = rows.iter().filter(|r| r[0] == "dataoob").map(|r| r[1].as_str()).collect();
    assert_eq!(fractions, ["0", "0.25", "0.5", "0.75"]);
    let at_zero: Vec<&str> = rows.iter().filter(|r| r[1] == "0").map(|r| r[3].as_str()).collect();
    assert_eq!(at_zero.len(), 2);
    assert_eq!(at_zero[0], at_zero[1]);
    let pca = csv_rows(&dir.path().join("pca.csv"));
    assert_eq!(pca.len(), 200);
    let mut ranks: Vec<usize> = pca.iter().map(|r| r[6].parse().unwrap()).collect();
    ranks.sort();
    assert_eq!(ranks, (0..200).collect::<Vec<_>>());
}

#[test]
fn bench_echoes_grid_and_repetitions() {
    let dir = tempfile::tempdir().unwrap();
    let code = run_in(dir.path(), &["bench", "--n-grid", "100,200,400", "--b", "10", "--repetitions", "2"]);
    assert_eq!(code, EXIT_OK);
    let rows = csv_rows(&dir.path().join("bench.csv"));
    assert_eq!(rows.len(), 2 * 3 * 2);
    let summary = json(&dir.path().join("bench_summary.json"));
    let ns: Vec<u64> = summary["records"].as_array().unwrap().iter().map(|r| r["n"].as_u64().unwrap()).collect();
    assert_eq!(ns, [100, 200, 400, 100, 200, 400]);
    assert!(summary["loglog_slopes"]["dataoob"].is_number());
    assert!(summary["loglog_slopes"]["knn-shapley"].is_number());
}

#[test]
fn csv_input_with_named_label_column() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let mut text = String::from("a,b,target\n");
    for i in 0..120 {
        let x = i as f64 / 120.0;
        text.push_str(&format!("{x},{},{}\n", (i * 7 % 11) as f64, if x > 0.5 { "yes" } else { "no" }));
    }
    fs::write(&data, text).unwrap();
    let out = dir.path().join("out");
    let code = run_in(
        &out,
        &[
            "value",
            "--csv",
            data.to_str().unwrap(),
            "--label-column",
            "target",
            "--n",
            "80",
            "--test-size",
            "20",
            "--method",
            "knn-shapley",
        ],
    );
    assert_eq!(code, EXIT_OK);
    assert_eq!(csv_rows(&out.join("values.csv")).len(), 80);
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["config"]["k"], serde_json::Value::Null);
    assert_eq!(m["diagnostics"]["k"], 8);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"synthetic": true, "n": 150, "b": 30, "seed": 4}"#).unwrap();
    let out = dir.path().join("out");
    assert_eq!(run_in(&out, &["value", "--config", cfg.to_str().unwrap(), "--b", "40"]), EXIT_OK);
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["config"]["b"], 40);
    assert_eq!(m["config"]["n"], 150);
    assert_eq!(m["config"]["seed"], 4);

    fs::write(&cfg, r#"{"synthetic": true, "trees": 5}"#).unwrap();
    assert_eq!(run_in(&out, &["value", "--config", cfg.to_str().unwrap()]), EXIT_CONFIG);
}
