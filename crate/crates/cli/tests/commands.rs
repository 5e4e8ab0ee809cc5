use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vlcnoise(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vlcnoise"))
        .args(args)
        .arg("--output-dir")
        .arg(out)
        .output()
        .unwrap()
}

fn ok(args: &[&str], out: &Path) {
    let o = vlcnoise(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(vlcnoise(&["synth", "--alpha", "3", "--length", "10"], d).status.code(), Some(1));
    assert_eq!(vlcnoise(&["dataset", "--count", "0"], d).status.code(), Some(1));
    assert_eq!(vlcnoise(&["synth", "--length", "10"], d).status.code(), Some(1));
    assert_eq!(vlcnoise(&["frobnicate"], d).status.code(), Some(1));

    fs::write(d.join("bad.csv"), "sample_rate_hz=10\n0.1\nabc\n").unwrap();
    let o = vlcnoise(&["analyze", "avar", &path(d, "bad.csv")], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    assert_eq!(vlcnoise(&["analyze", "avar", &path(d, "missing.csv")], d).status.code(), Some(2));
    assert_eq!(vlcnoise(&["--help"], d).status.code(), Some(0));
}

#[test]
fn analyze_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--alpha", "0", "--length", "100000", "--name", "white_only", "--seed", "1"], d);
    let input = path(d, "white_only.csv");

    ok(&["analyze", "ljung-box", &input, "--max-lag", "100", "--alpha", "0.05"], d);
    let lb = fs::read_to_string(d.join("ljung_box.csv")).unwrap();
    assert_eq!(lb.lines().count(), 101);
    assert!(lb.starts_with("lag,q_stat,threshold,reject\n"));

    ok(&["analyze", "avar", &input, "--points-per-decade", "10"], d);
    let avar = fs::read_to_string(d.join("avar.csv")).unwrap();
    assert!(avar.starts_with("tau_s,avar,adev\n"));

    ok(&["analyze", "coeffs", &input], d);
    let c: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("coeffs.json")).unwrap()).unwrap();
    assert!(c.get("white_n").is_some());
    assert!(c.get("flicker_b").is_none());
    assert!(c.get("random_walk_k").is_none());
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["synth", "--component", "0:1:1", "--component", "2:0.01:1", "--length", "3000", "--seed", "9"];
    ok(&args, &a);
    ok(&args, &b);
    assert_eq!(fs::read(a.join("noise.csv")).unwrap(), fs::read(b.join("noise.csv")).unwrap());
    ok(&["synth", "--alpha", "1", "--length", "3000", "--seed", "10"], &b);
    assert_ne!(fs::read(a.join("noise.csv")).unwrap(), fs::read(b.join("noise.csv")).unwrap());
}

#[test]
fn dataset_train_denoise_eval() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["dataset", "--count", "1", "--window", "64", "--name", "one"], d);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("one/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["count"], 1);

    ok(&["dataset", "--count", "300", "--window", "64", "--seed", "3"], d);
    ok(&["train", "--dataset", &path(d, "dataset"), "--filters", "8,4", "--epochs", "25", "--batch-size", "25", "--lr", "0.005", "--seed", "3"], d);
    let history = fs::read_to_string(d.join("model.history.csv")).unwrap();
    assert_eq!(history.lines().count(), 27);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("model.json")).unwrap()).unwrap();
    let (noisy, denoised) = (
        summary["holdout_rmse_noisy"].as_f64().unwrap(),
        summary["holdout_rmse_denoised"].as_f64().unwrap(),
    );
    assert!(denoised < 0.8 * noisy, "{denoised} vs {noisy}");

    ok(&["eval", "--model", &path(d, "model.cae"), "--dataset", &path(d, "dataset")], d);
    let eval = fs::read_to_string(d.join("eval.csv")).unwrap();
    assert!(eval.starts_with("label,pairs,noisy_rmse,denoised_rmse\nsynthetic,300,"));

    fs::write(d.join("long.csv"), format!("sample_rate_hz=1\n{}", "0\n1\n".repeat(50))).unwrap();
    let o = vlcnoise(&["denoise", "--model", &path(d, "model.cae"), &path(d, "long.csv")], d);
    assert_eq!(o.status.code(), Some(2));

    fs::write(d.join("short.csv"), format!("sample_rate_hz=1\n{}", "0\n1\n".repeat(32))).unwrap();
    ok(&["denoise", "--model", &path(d, "model.cae"), &path(d, "short.csv"), "--format", "json"], d);
    assert!(d.join("short.denoised.json").exists());

    ok(&["eval", "--denoised", &path(d, "short.csv"), "--clean", &path(d, "short.csv")], d);
    let eval = fs::read_to_string(d.join("eval.csv")).unwrap();
    assert_eq!(eval, "label,samples,rmse\ncapture,64,0\n");
}

#[test]
fn train_rejects_mismatched_architecture() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["dataset", "--count", "60", "--window", "64"], d);
    let o = vlcnoise(&["train", "--dataset", &path(d, "dataset"), "--filters", "4,2", "--kernel", "0"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(!d.join("model.cae").exists());
}

#[test]
fn rerun_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["synth", "--alpha", "1.5", "--length", "5000", "--seed", "2", "--format", "json"], &a);
    ok(&["rerun", &path(&a, "noise.manifest.json")], &b);
    assert_eq!(fs::read(a.join("noise.json")).unwrap(), fs::read(b.join("noise.json")).unwrap());
    assert_eq!(
        fs::read(a.join("noise.manifest.json")).unwrap(),
        fs::read(b.join("noise.manifest.json")).unwrap()
    );
}
