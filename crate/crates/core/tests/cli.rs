use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use slacast::pipeline::tree_digest;

fn smoke() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/smoke.toml")
}

fn slacast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slacast"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("spawn slacast")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_is_repeatable() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = slacast(&["--config", s(&smoke()), "--out", s(out), "synth"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let da = tree_digest(&a.join("data")).unwrap();
    assert_eq!(da, tree_digest(&b.join("data")).unwrap());
    // 14 cells, handover table and manifest.
    assert_eq!(da.len(), 16);
    assert!(a.join("data/GU14.csv").exists());
    assert!(a.join("data/handover.csv").exists());
}

#[test]
fn invalid_config_exits_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "schema_version = 1\n[scenario]\ntarget_correlation = 1.0\n").unwrap();
    let o = slacast(&["--config", s(&cfg), "--out", s(&tmp.path().join("o")), "synth"]);
    assert_eq!(o.status.code(), Some(2));

    let o = slacast(&["--config", s(&tmp.path().join("missing.toml")), "synth"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn env_overrides_and_foreign_output_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = Command::new(env!("CARGO_BIN_EXE_slacast"))
        .args(["synth"])
        .env("SLACAST_CONFIG", smoke())
        .env("SLACAST_OUT", &out)
        .env("RUST_LOG", "error")
        .output()
        .unwrap();
    assert!(o.status.success());
    // A different seed is a different config; its artifacts must not mix.
    let o = slacast(&["--config", s(&smoke()), "--out", s(&out), "--seed", "99", "synth"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("produced by config"));
}

#[test]
fn predict_from_origin_emits_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let config = smoke();
    let base = ["--config", s(&config), "--out", s(&out)];
    let o = slacast(&[&base[..], &["predict", "--variant", "peak", "--origin", "2024-02-25T05:00:00", "--horizon", "6"]].concat());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "timestamp,step,prediction");
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("2024-02-25T05:00:00,1,"));
    assert!(lines[6].starts_with("2024-02-25T10:00:00,6,"));

    let o = slacast(&[&base[..], &["predict", "--origin", "2023-01-01T00:00:00"]].concat());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn neighbor_recursive_policy_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = slacast(&[
        "--config",
        s(&smoke()),
        "--out",
        s(&out),
        "predict",
        "--variant",
        "handover",
        "--origin",
        "2024-02-20T00:00:00",
        "--horizon",
        "3",
        "--handover-policy",
        "neighbor-recursive",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 4);
    assert!(out.join("models/neighbor_GU12.json").exists());
}

#[test]
fn staged_commands_share_the_cache() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let config = smoke();
    let base = ["--config", s(&config), "--out", s(&out)];
    let o = slacast(&[&base[..], &["run-all", "--stage", "train"]].concat());
    assert!(o.status.success());
    assert!(!out.join("models").exists());
    let o = slacast(&[&base[..], &["report"]].concat());
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(o.status.success());
    assert!(stdout.contains("train      cached"), "{stdout}");
    assert!(stdout.contains("calibrate  built"), "{stdout}");
    for f in ["report.json", "report.csv", "table_one_hour.csv", "table_horizons_0.05.csv", "plot_source_0.03_1h.csv"] {
        assert!(out.join("report").join(f).exists(), "{f}");
    }
}
