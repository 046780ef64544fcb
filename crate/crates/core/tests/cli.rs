use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs")
}

fn toomlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toomlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("TOOMLAB_SEED")
        .output()
        .expect("spawn toomlab")
}

fn config(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).expect("json error line");
    serde_json::from_str(line).unwrap()
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let nec = toomlab(&["check", "--config", &config("check_nec.json")], dir.path());
    assert_eq!(nec.status.code(), Some(0), "{}", String::from_utf8_lossy(&nec.stderr));
    let cert: Value = serde_json::from_slice(&std::fs::read(dir.path().join("certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["command"], "check");
    assert!(dir.path().join("bounds.json").exists());

    let maj = toomlab(&["check", "--config", &config("check_majority.json")], dir.path());
    assert_eq!(maj.status.code(), Some(2));

    let xor = toomlab(&["check", "--config", &config("check_xor.json")], dir.path());
    assert_eq!(xor.status.code(), Some(1));
    assert!(stderr_json(&xor)["error"]["message"].as_str().unwrap().contains("monotone"));
}

#[test]
fn simulate_reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = config("simulate_nec.json");
    for dir in [&a, &b] {
        let out = toomlab(&["simulate", "--config", &cfg], dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let ca = std::fs::read(a.path().join("density.csv")).unwrap();
    let cb = std::fs::read(b.path().join("density.csv")).unwrap();
    assert_eq!(ca, cb);
    let text = String::from_utf8(ca).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# toomlab simulate"));
    assert!(lines.next().unwrap().starts_with("# config: {"));
    assert_eq!(lines.next(), Some("step,density"));
}

#[test]
fn thread_count_does_not_change_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = config("simulate_nec.json");
    let one = toomlab(&["simulate", "--config", &cfg, "--threads", "1"], a.path());
    let four = toomlab(&["simulate", "--config", &cfg, "--threads", "4"], b.path());
    assert!(one.status.success() && four.status.success());
    assert_eq!(
        std::fs::read(a.path().join("density.csv")).unwrap(),
        std::fs::read(b.path().join("density.csv")).unwrap()
    );
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"rule":"nec","noise":{"kind":"symmetric","eps":0.1},"dims":[64,64],"steps":20,"seed":5}"#,
    );
    let seed_of = |extra: &[&str], env: Option<&str>| -> u64 {
        let out_dir = tempfile::tempdir().unwrap();
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_toomlab"));
        cmd.args(["simulate", "--config", &cfg]).args(extra).arg("--out").arg(out_dir.path());
        match env {
            Some(v) => cmd.env("TOOMLAB_SEED", v),
            None => cmd.env_remove("TOOMLAB_SEED"),
        };
        let out = cmd.output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let summary: Value =
            serde_json::from_slice(&std::fs::read(out_dir.path().join("density.json")).unwrap()).unwrap();
        summary["config"]["seed"].as_u64().unwrap()
    };
    assert_eq!(seed_of(&[], None), 5);
    assert_eq!(seed_of(&[], Some("9")), 9);
    assert_eq!(seed_of(&["--seed", "11"], Some("9")), 11);
}

#[test]
fn config_errors_are_reported_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"rule":"nec","dims":[64,64],"colour":"red"}"#);
    let out = toomlab(&["simulate", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"]["kind"], "config");

    let out = toomlab(&["simulate", "--config", &config("check_nec.json")], dir.path());
    assert_eq!(out.status.code(), Some(1), "command mismatch should be rejected");

    let out = toomlab(&["simulate", "--config", "/nonexistent/config.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn zero_steps_writes_initial_state_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"rule":"nec","noise":{"kind":"symmetric","eps":0.1},"dims":[64,64],"steps":0}"#,
    );
    let out = toomlab(&["simulate", "--config", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("density.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows, ["0,0"]);
}

#[test]
fn embedded_config_reproduces_run() {
    let a = tempfile::tempdir().unwrap();
    let out = toomlab(&["divergence", "--config", &config("divergence_nec.json"), "--seed", "3"], a.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&std::fs::read(a.path().join("divergence.json")).unwrap()).unwrap();
    let embedded = summary["config"].to_string();

    let b = tempfile::tempdir().unwrap();
    let cfg = write_config(b.path(), &embedded);
    let out = toomlab(&["divergence", "--config", &cfg], b.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        std::fs::read(a.path().join("divergence.csv")).unwrap(),
        std::fs::read(b.path().join("divergence.csv")).unwrap()
    );
}

#[test]
fn every_example_config_runs() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "json") {
            continue;
        }
        let cfg: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let command = cfg["command"].as_str().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = toomlab(&[command, "--config", path.to_str().unwrap()], dir.path());
        let expected = match path.file_stem().unwrap().to_str().unwrap() {
            "check_majority" => 2,
            "check_xor" => 1,
            _ => 0,
        };
        assert_eq!(
            out.status.code(),
            Some(expected),
            "{}: {}",
            path.display(),
            String::from_utf8_lossy(&out.stderr)
        );
    }
}
