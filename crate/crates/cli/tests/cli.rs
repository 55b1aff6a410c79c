use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const FIVE_ROWS: &str = "x,y\n0.1,5\n0.3,2.1\n0.5,1\n0.6,2\n0.9,4\n";

fn symrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symrank")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn three_columns(dir: &Path) -> PathBuf {
    write(dir, "d3.csv", "a,b,c,y\n0.1,0.2,0.3,1\n0.4,0.5,0.7,2\n0.9,0.1,0.2,3\n0.6,0.8,0.5,4\n")
}

fn layer_counts(manifest: &Value) -> Vec<(u64, u64)> {
    manifest["layer_counts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| (l["raw"].as_u64().unwrap(), l["distinct"].as_u64().unwrap()))
        .collect()
}

#[test]
fn gen_features_layer_counts() {
    let dir = TempDir::new().unwrap();
    let input = three_columns(dir.path());
    let out = dir.path().join("bu");
    assert!(symrank(&["gen-features", "--input", s(&input), "--out-dir", s(&out)]).status.success());
    let m = json(&out.join("manifest.json"));
    assert_eq!(layer_counts(&m), vec![(18, 12), (24, 24)]);
    assert_eq!(m["n_features"], 24);
    let header = fs::read_to_string(out.join("features.csv")).unwrap();
    assert_eq!(header.lines().next().unwrap().split(',').count(), 25);
    assert_eq!(header.lines().count(), 5);

    let out = dir.path().join("ub");
    assert!(symrank(&["gen-features", "--input", s(&input), "--arch", "ub", "--out-dir", s(&out)]).status.success());
    assert_eq!(layer_counts(&json(&out.join("manifest.json"))), vec![(6, 6), (72, 42)]);

    let cfg = write(dir.path(), "g.json", r#"{"architecture": "ub", "operators": {"unary": ["id"], "binary": ["+"]}}"#);
    let out = dir.path().join("cfg");
    assert!(symrank(&["gen-features", "--input", s(&input), "--config", s(&cfg), "--out-dir", s(&out)])
        .status
        .success());
    assert_eq!(layer_counts(&json(&out.join("manifest.json"))), vec![(3, 3), (9, 6)]);
}

#[test]
fn malformed_csv_names_the_row() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.csv", "x,y\n1,2\n3,oops\n");
    let o = symrank(&["gen-features", "--input", s(&bad), "--out-dir", s(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 3"));
    let ragged = write(dir.path(), "ragged.csv", "x,y\n1,2\n3\n");
    let o = symrank(&["score", "--input", s(&ragged), "--out-dir", s(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 3"));
}

#[test]
fn score_concordant_and_constant_columns() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "f.csv", "u,k,y\n1,7,10\n2,7,20\n3,7,30\n4,7,45\n");
    let out = dir.path().join("s");
    let o = symrank(&["score", "--input", s(&input), "--methods", "t0,kendall", "--out-dir", s(&out)]);
    assert!(o.status.success());
    let v = json(&out.join("scores.json"));
    let t0 = &v["methods"][0];
    assert_eq!(t0["method"], "t0");
    assert_eq!(t0["scores"][0], 0.0);
    assert_eq!(t0["scores"][1], f64::MAX);
    assert_eq!(t0["warnings"][0]["feature"], "k");
    assert_eq!(v["methods"][1]["scores"][0], 1.0);
    assert_eq!(v["methods"][1]["scores"][1], -1.0);
    let csv = fs::read_to_string(out.join("scores.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "feature,t0,kendall");
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn score_all_methods_on_five_rows() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "a.csv", FIVE_ROWS);
    let out = dir.path().join("s");
    assert!(symrank(&["score", "--input", s(&input), "--out-dir", s(&out)]).status.success());
    let v = json(&out.join("scores.json"));
    let get = |name: &str| -> f64 {
        v["methods"].as_array().unwrap().iter().find(|m| m["method"] == name).unwrap()["scores"][0].as_f64().unwrap()
    };
    // hand evaluation: y in x order is 5, 2.1, 1, 2, 4
    let x = [0.1, 0.3, 0.5, 0.6, 0.9];
    let y = [5.0, 2.1, 1.0, 2.0, 4.0];
    let (mx, my) = (x.iter().sum::<f64>() / 5.0, y.iter().sum::<f64>() / 5.0);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    assert!(close(get("pearson"), (sxy / (sxx * syy).sqrt()).abs()));
    // y ranks 5,3,1,2,4: sum d^2 = 26
    assert!(close(get("spearman"), 0.3));
    // 4 concordant, 6 discordant pairs
    assert!(close(get("kendall"), 0.2));
    // 1 - 3 * 7 / 24
    assert!(close(get("chatterjee"), 0.125));
    // discordant |dy| = 2.9 + 4 + 3 + 1 + 1.1 + 0.1, scaled by 4 / (n (n - 1))
    assert!(close(get("t0"), 12.1 * 4.0 / 20.0));
    assert!(get("tree-importance") > 0.0);
}

#[test]
fn select_prints_best_columns() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "f.csv", "noise,good,y\n3,1,10\n1,2,20\n4,3,30\n2,4,45\n");
    let v = stdout_json(&symrank(&["select", "--input", s(&input), "--methods", "t0", "--n-selected", "1"]));
    assert_eq!(v["selections"][0]["features"][0], "good");
    let o = symrank(&["select", "--input", s(&input), "--methods", "t0", "--n-selected", "5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = symrank(&["select", "--input", s(&input), "--methods", "bart"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oracle_partition_golden_and_guard() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "a.csv", FIVE_ROWS);
    let v = stdout_json(&symrank(&["oracle-partition", "--input", s(&input), "--size", "2", "--brute-force"]));
    assert_eq!(v["best"]["left"], serde_json::json!([0, 4]));
    assert!((v["best"]["loss"].as_f64().unwrap() - 1.24).abs() < 1e-12);
    assert!((v["prefix"]["loss"].as_f64().unwrap() - 4.84).abs() < 1e-12);
    assert_eq!(v["winner"], "suffix");
    assert_eq!(v["brute_force"]["agrees"], true);

    let v = stdout_json(&symrank(&["oracle-partition", "--input", s(&input)]));
    assert_eq!(v["size"], 3);

    let rows: String = (0..20).map(|k| format!("{}\n", (k * 7 % 20) as f64 / 3.0)).collect();
    let big = write(dir.path(), "big.csv", &format!("y\n{rows}"));
    let o = symrank(&["oracle-partition", "--input", s(&big), "--size", "5", "--brute-force"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("16"));
    assert!(symrank(&["oracle-partition", "--input", s(&big), "--size", "5"]).status.success());
}

const MAPS: &str = r#"{
  "theta1": {"domain": [0, 1], "segments": [{"expr": "x+1.2", "direction": "increasing"}]},
  "theta2": {"domain": [0, 1], "breakpoints": [0.5], "segments": [
    {"expr": "-4*x^2+4*x", "direction": "increasing"},
    {"expr": "-4*x^2+4*x", "direction": "decreasing"}]},
  "c_grid": [-1, 0.5, 1.1, 1.5, 1.9, 3]
}"#;

#[test]
fn p12_signed_table() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "maps.json", MAPS);
    let o = symrank(&["p12", "--config", s(&cfg)]);
    let v = stdout_json(&o);
    let p: Vec<f64> = v["rows"].as_array().unwrap().iter().map(|r| r["p"].as_f64().unwrap()).collect();
    let expected = [0.0, -1.0, 0.0, 0.5, 0.5, 0.0];
    for (a, b) in p.iter().zip(expected) {
        assert!((a - b).abs() < 1e-12, "{p:?}");
    }
    assert_eq!(v["rows"][1]["preferred"], 2);
    assert_eq!(v["rows"][1]["abs_p"], 1.0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("note:"));

    let v = stdout_json(&symrank(&["p12", "--config", s(&cfg), "--grid=-1,1.7"]));
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert!((v["rows"][1]["p"].as_f64().unwrap() - 0.5).abs() < 1e-12);

    let bad = write(dir.path(), "bad.json", &MAPS.replace("\"decreasing\"", "\"increasing\""));
    assert_eq!(symrank(&["p12", "--config", s(&bad)]).status.code(), Some(2));
}

#[test]
fn experiment_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "exp.json",
        r#"{"signal": {"kind": "three-var"}, "architectures": ["bu", "ub"], "n": 40, "repeats": 1,
            "noise_vars": [0.0, 0.1], "seed": 11}"#,
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(symrank(&["experiment", "--config", s(&cfg), "--out-dir", s(&a)]).status.success());
    assert!(symrank(&["experiment", "--config", s(&cfg), "--out-dir", s(&b)]).status.success());
    for f in ["report.json", "summary.csv", "pr_curves.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let r = json(&a.join("report.json"));
    assert_eq!(r["cells"].as_array().unwrap().len(), 4);
    assert_eq!(r["config"]["seed"], 11);
    assert!(json(&a.join("timings.json"))["total_seconds"].as_f64().is_some());

    let c = dir.path().join("c");
    assert!(symrank(&["experiment", "--config", s(&cfg), "--seed", "12", "--out-dir", s(&c)]).status.success());
    assert_eq!(json(&c.join("report.json"))["config"]["seed"], 12);
}

#[test]
fn experiment_config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    for body in [
        r#"{"signal": {"kind": "three-var"}, "repeats": 0}"#,
        r#"{"signal": {"kind": "three-var"}, "colour": "red"}"#,
        r#"{"signal": {"kind": "candidates", "truth": "sin(x)", "candidates": ["x"]}}"#,
        "not json",
    ] {
        let cfg = write(dir.path(), "bad.json", body);
        let o = symrank(&["experiment", "--config", s(&cfg), "--out-dir", s(&dir.path().join("o"))]);
        assert_eq!(o.status.code(), Some(2), "{body}");
    }
}

#[test]
fn tree_grow_predict_serialize() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "a.csv", FIVE_ROWS);
    let out = dir.path().join("t");
    assert!(symrank(&["tree", "grow", "--input", s(&input), "--depth", "2", "--out-dir", s(&out)]).status.success());
    let model = out.join("tree.json");
    let v = stdout_json(&symrank(&["tree", "predict", "--model", s(&model), "--input", s(&input), "--response", "y"]));
    let pred: Vec<f64> = v["predictions"].as_array().unwrap().iter().map(|p| p.as_f64().unwrap()).collect();
    let expected = [5.0, 1.7, 1.7, 1.7, 4.0];
    assert!(pred.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-12), "{pred:?}");

    let o = symrank(&["tree", "serialize", "--model", s(&model)]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("x1 <= 0.1") && text.contains("x1 <= 0.6"), "{text}");
    let o = symrank(&["tree", "serialize", "--model", s(&model), "--format", "json"]);
    assert_eq!(serde_json::from_slice::<Value>(&o.stdout).unwrap(), json(&model));

    let two = write(dir.path(), "two.csv", "a,b\n1,2\n");
    let o = symrank(&["tree", "predict", "--model", s(&model), "--input", s(&two)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn thread_variable_is_validated() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "a.csv", FIVE_ROWS);
    let o = Command::new(env!("CARGO_BIN_EXE_symrank"))
        .args(["oracle-partition", "--input", s(&input)])
        .env("SYMRANK_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_symrank"))
        .args(["oracle-partition", "--input", s(&input)])
        .env("SYMRANK_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success());
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(symrank(&["score"]).status.code(), Some(2));
    assert_eq!(symrank(&["no-such-command"]).status.code(), Some(2));
    assert!(symrank(&["--help"]).status.success());
}
