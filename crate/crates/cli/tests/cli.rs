use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn treeprobe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treeprobe"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn generate_path_writes_edges() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.txt");
    let out = treeprobe(&["generate", "--family", "path", "--n", "10", "--seed", "1", "-o", file.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&file).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "10");
    assert_eq!(lines.len() - 1, 9);
    assert!(text.ends_with('\n'));
}

#[test]
fn test_prints_one_verdict_line() {
    let out = treeprobe(&[
        "test", "--procedure", "diameter", "--family", "path", "--n", "500", "--threshold", "400",
        "--delta", "0.25", "--epsilon", "0.1", "--seed", "42",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["test"], "diameter");
    assert_eq!(v["decision"], "accept");
    assert!(v["queries_used"].as_u64().unwrap() > 0);
}

#[test]
fn tree_file_roundtrip_through_recover() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.txt");
    let f = file.to_str().unwrap();
    assert!(treeprobe(&["generate", "--family", "star", "--n", "8", "-o", f]).status.success());
    let out = treeprobe(&["recover", "--tree", f, "--sample", "2,3"]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("3\n"));
    let ledger: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(ledger["queries_used"], 2 * 6 + 1);
}

#[test]
fn estimate_prints_interval() {
    let out = treeprobe(&[
        "estimate", "--property", "max_degree", "--family", "star", "--n", "40", "--delta", "0.3",
        "--epsilon", "0.2", "--seed", "3",
    ]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["lo"].as_f64().unwrap() <= 39.0 && 39.0 <= v["hi"].as_f64().unwrap());
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("cfg.json");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn experiment_from_config_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"family":"path","n":60,"procedure":"diameter","threshold":40,"delta":0.3,
            "epsilon":0.2,"trials":5,"base_seed":9,"record_timing":false}"#,
    );
    let run = |tag: &str| {
        let csv = dir.path().join(format!("{tag}.csv"));
        let jsonl = dir.path().join(format!("{tag}.jsonl"));
        let out = treeprobe(&[
            "experiment", "--config", &cfg, "--csv", csv.to_str().unwrap(), "--jsonl",
            jsonl.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (
            std::fs::read(csv).unwrap(),
            std::fs::read(jsonl).unwrap(),
            out.stdout,
        )
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    let csv = String::from_utf8(a.0).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "trial,seed,true_value,decision,statistic,sample_size,queries_used,wall_time_ms"
    );
    assert_eq!(csv.lines().count(), 6);
    assert_eq!(String::from_utf8(a.1).unwrap().lines().count(), 5);
    let summary: Value = serde_json::from_slice(&a.2).unwrap();
    assert_eq!(summary["trials"], 5);
}

#[test]
fn experiment_from_flags() {
    let out = treeprobe(&[
        "experiment", "--family", "star", "--n", "30", "--procedure", "leaves", "--threshold", "20",
        "--trials", "3", "--no-timing",
    ]);
    assert!(out.status.success());
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["regime"], "null");
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad_field = write_config(dir.path(), r#"{"family":"path","n":10,"bogus":1}"#);
    assert_eq!(treeprobe(&["experiment", "--config", &bad_field]).status.code(), Some(2));

    let zero_trials = write_config(
        dir.path(),
        r#"{"family":"path","n":10,"procedure":"diameter","threshold":5,"delta":0.3,
            "epsilon":0.2,"trials":0,"base_seed":1}"#,
    );
    let out = treeprobe(&["experiment", "--config", &zero_trials]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trials"));

    assert_eq!(treeprobe(&["test", "--unknown-flag"]).status.code(), Some(2));
    let out = treeprobe(&[
        "test", "--procedure", "leaves", "--family", "path", "--n", "10", "--threshold", "3",
        "--delta", "1.5", "--epsilon", "0.1",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let unwritable = treeprobe(&["generate", "--family", "path", "--n", "3", "-o", "/nonexistent/dir/t.txt"]);
    assert_eq!(unwritable.status.code(), Some(2));
}

#[test]
fn verify_single_criterion() {
    let out = treeprobe(&["verify", "--suite", "acceptance", "--criterion", "3"]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("[PASS] criterion  3"));
    assert_eq!(treeprobe(&["verify", "--suite", "nope"]).status.code(), Some(2));
}
