use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cfn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfn")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = cfn(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for f in [&a, &b] {
        ok(&["generate", "shm", "--n", "500", "--noise", "0.1", "--seed", "7", "--out", p(f)]);
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 501);
    assert_eq!(text.lines().next(), Some("t,x"));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let spiral = dir.path().join("s.csv");
    ok(&["generate", "spiral", "--n", "10", "--out", p(&spiral)]);
    assert_eq!(fs::read_to_string(&spiral).unwrap().lines().count(), 31);
}

#[test]
fn bad_arguments_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    assert!(!cfn(&["generate", "torus", "--out", p(&out)]).status.success());
    assert!(!out.exists());
    assert!(!cfn(&["generate", "concentric", "--noise", "0.1", "--out", p(&out)]).status.success());
    assert!(!out.exists());
}

#[test]
fn train_evaluate_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("shm.csv");
    let model = dir.path().join("shm.json");
    let test = dir.path().join("held_out.csv");
    ok(&["generate", "shm", "--seed", "1", "--out", p(&data)]);
    let printed = ok(&[
        "train", "--data", p(&data), "--target", "x", "--task", "regression", "--preset",
        "symreg_sin", "--seed", "3", "--out", p(&model), "--test-out", p(&test),
    ]);
    assert!(printed.contains("Amplitude (A): "), "{printed}");

    let history = fs::read_to_string(dir.path().join("shm.history.csv")).unwrap();
    assert_eq!(history.lines().next(), Some("epoch,train_loss,val_loss,lr"));
    let trained = fs::read_to_string(dir.path().join("shm.metrics.json")).unwrap();
    let evaluated = ok(&["evaluate", "--model", p(&model), "--data", p(&test)]);
    assert_eq!(trained, evaluated);
    let m: serde_json::Value = serde_json::from_str(&evaluated).unwrap();
    assert!(m.get("rmse").is_some() && m.get("accuracy").is_none());

    let text = ok(&["report", "--model", p(&model)]);
    assert!(text.contains("x(t) = A·sin(ω·t + φ)"), "{text}");
    assert!(text.contains("Layer 0: sequential"));
    let structured = ok(&["report", "--model", p(&model), "--format", "structured"]);
    let r: serde_json::Value = serde_json::from_str(&structured).unwrap();
    assert_eq!(r["network"]["layers"].as_array().unwrap().len(), 1);
    assert_eq!(r["metadata"]["preset"], "symreg_sin");
}

#[test]
fn failures_leave_no_model_behind() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("spiral.csv");
    let model = dir.path().join("m.json");
    ok(&["generate", "spiral", "--n", "20", "--out", p(&data)]);
    // Unknown preset, and a preset that does not fit the task.
    for preset in ["resnet", "symreg_sin"] {
        let out = cfn(&[
            "train", "--data", p(&data), "--target", "label", "--task", "multiclass", "--preset",
            preset, "--out", p(&model),
        ]);
        assert!(!out.status.success());
    }
    assert!(!model.exists());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn evaluate_rejects_wrong_feature_count() {
    let dir = tempfile::tempdir().unwrap();
    let (shm, conc) = (dir.path().join("shm.csv"), dir.path().join("c.csv"));
    let model = dir.path().join("m.json");
    ok(&["generate", "shm", "--n", "60", "--out", p(&shm)]);
    ok(&["generate", "concentric", "--n", "60", "--out", p(&conc)]);
    ok(&[
        "train", "--data", p(&shm), "--target", "x", "--task", "regression", "--preset", "symreg_sin",
        "--epochs", "5", "--out", p(&model),
    ]);
    let out = cfn(&["evaluate", "--model", p(&model), "--data", p(&conc), "--target", "y"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("shape error"));
}

#[test]
fn single_seed_benchmark_flags_its_sd() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("shm.csv");
    let report = dir.path().join("bench.json");
    ok(&["generate", "shm", "--n", "100", "--out", p(&data)]);
    let text = ok(&[
        "benchmark", "--data", p(&data), "--target", "x", "--task", "regression", "--preset",
        "symreg_sin", "--seeds", "1", "--epochs", "50", "--out", p(&report),
    ]);
    assert!(text.contains("standard deviations are reported as 0"), "{text}");
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["sd_defined"], false);
    assert_eq!(r["summary"][0]["sd"], 0.0);
    assert!(r["runs"][0]["seconds"].as_f64().unwrap() >= 0.0);
}
