//! End-to-end runs of the binary: exit codes, error JSON and training output.

use std::path::Path;
use std::process::{Command, Output};

use margin_auditor::data::{export_dataset, synth_blobs};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_margin-auditor"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().args(args).current_dir(dir).env("MARGIN_AUDITOR_THREADS", "1").output().unwrap()
}

fn error_kind(o: &Output) -> String {
    let stderr = String::from_utf8_lossy(&o.stderr);
    let last = stderr.lines().last().expect("stderr is empty");
    let v: serde_json::Value = serde_json::from_str(last).expect("last stderr line is JSON");
    assert_eq!(v["error"]["exit_code"].as_i64(), o.status.code().map(i64::from));
    v["error"]["kind"].as_str().unwrap().to_string()
}

fn blobs_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    export_dataset(&synth_blobs(90, 4, 3, 2.0, 1).unwrap(), p.join("tr.mat"), p.join("tr.lbl")).unwrap();
    export_dataset(&synth_blobs(30, 4, 3, 2.0, 2).unwrap(), p.join("te.mat"), p.join("te.lbl")).unwrap();
    dir
}

const TRAIN: [&str; 9] = [
    "train",
    "--train-features",
    "tr.mat",
    "--train-labels",
    "tr.lbl",
    "--test-features",
    "te.mat",
    "--test-labels",
    "te.lbl",
];

#[test]
fn usage_errors_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(tmp.path(), &["frobnicate"]).status.code(), Some(3));
    assert_eq!(run(tmp.path(), &["maurey", "--k", "-1"]).status.code(), Some(3));
    assert_eq!(run(tmp.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn missing_file_exits_2_with_json() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["idx-inspect", "nope.idx"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_kind(&o), "io");
}

#[test]
fn bad_delta_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        tmp.path(),
        &["analyze", "--network", "m.json", "--features", "x", "--labels", "y", "--delta", "1.5"],
    );
    assert_eq!(o.status.code(), Some(3));
    error_kind(&o);
}

#[test]
fn demos_succeed() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        &["maurey"][..],
        &["coverdemo", "--eps", "0.2"],
        &["lowerbound", "--trials", "500"],
        &["lowerbound", "--a", "-1,2,0.5", "--depth", "5", "--trials", "200"],
    ] {
        let o = run(tmp.path(), args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert!(v.is_object());
    }
}

#[test]
fn idx_inspect_reads_bundled_mnist() {
    let p = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/mnist/test1k-labels-idx1-ubyte");
    let o = bin().args(["idx-inspect", p]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["count"], 1000);
}

#[test]
fn train_writes_one_snapshot_per_epoch() {
    let dir = blobs_dir();
    let p = dir.path();
    std::fs::write(p.join("c.json"), r#"{"layer_widths":[4,8,3],"epochs":3,"batch_size":10}"#).unwrap();
    let mut args = TRAIN.to_vec();
    args.extend(["--config", "c.json", "--out", "out"]);
    let o = run(p, &args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for e in 1..=3 {
        assert!(p.join(format!("out/epoch-{e:04}.json")).is_file());
        assert!(p.join(format!("out/margins-{e:04}.csv")).is_file());
    }
    assert!(!p.join("out/epoch-0004.json").exists());
    let snaps: serde_json::Value = serde_json::from_slice(&std::fs::read(p.join("out/snapshots.json")).unwrap()).unwrap();
    assert_eq!(snaps.as_array().unwrap().len(), 3);
    assert!(p.join("out/network/manifest.json").is_file());

    // The trained network can be analyzed by the other subcommands.
    let o = run(p, &["margins", "--network", "out/network/manifest.json", "--features", "te.mat", "--labels", "te.lbl", "--out", "m"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["margins.csv", "histogram.csv", "kde.csv"] {
        assert!(p.join("m").join(f).is_file());
    }
}

#[test]
fn huge_learning_rate_diverges_with_exit_5() {
    let dir = blobs_dir();
    let p = dir.path();
    std::fs::write(p.join("c.json"), r#"{"layer_widths":[4,8,3],"epochs":5,"batch_size":10,"learning_rate":1e6}"#).unwrap();
    let mut args = TRAIN.to_vec();
    args.extend(["--config", "c.json", "--out", "out"]);
    let o = run(p, &args);
    assert_eq!(o.status.code(), Some(5), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(error_kind(&o), "diverged");
}

#[test]
fn bad_config_is_rejected() {
    let dir = blobs_dir();
    let p = dir.path();
    std::fs::write(p.join("c.json"), r#"{"layer_widths":[4,8,3],"epochs":0,"batch_size":10}"#).unwrap();
    let mut args = TRAIN.to_vec();
    args.extend(["--config", "c.json"]);
    assert_eq!(run(p, &args).status.code(), Some(3));
    std::fs::write(p.join("c.json"), r#"{"layer_widths":[4,3],"epochs":1,"batch_size":1,"momentum":0.9}"#).unwrap();
    assert_eq!(run(p, &args).status.code(), Some(2));
}

#[test]
fn thread_cap_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["lowerbound", "--trials", "2000", "--seed", "3"];
    let one = run(tmp.path(), &args);
    let auto = bin().args(args).env("MARGIN_AUDITOR_THREADS", "0").output().unwrap();
    assert_eq!(one.stdout, auto.stdout);
    let bad = bin().args(args).env("MARGIN_AUDITOR_THREADS", "many").output().unwrap();
    assert_eq!(bad.status.code(), Some(3));
}
