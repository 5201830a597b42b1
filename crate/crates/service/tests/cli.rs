use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn suif(data: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_suif"))
        .args(args)
        .env("SUIF_DATA_DIR", data)
        .env_remove("SUIF_MODE")
        .env_remove("SUIF_PROVIDER_URL")
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn parse_in_mock_mode_fills_description() {
    let dir = tempfile::tempdir().unwrap();
    let brief = dir.path().join("brief.txt");
    std::fs::write(&brief, "A habit tracker app\n").unwrap();
    ok(&suif(dir.path(), &["parse", "--in", brief.to_str().unwrap(), "--session", "s1", "--mode", "mock"]));
    let view: Value = serde_json::from_str(&ok(&suif(dir.path(), &["show", "--session", "s1", "--mode", "mock"]))).unwrap();
    assert_eq!(view["state"]["product"]["description"]["text"], "A habit tracker app");
    assert_eq!(view["state"]["product"]["description"]["provenance"], "parsed");
}

#[test]
fn diff_prints_changelog_lines() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&suif(d, &["set", "--session", "s1", "--mode", "mock", "--path", "design_system.color", "Dark Mode"]));
    ok(&suif(d, &["set", "--session", "s1", "--mode", "mock", "--path", "design_system.color", "Neon Green"]));
    let out = ok(&suif(d, &["diff", "--session", "s1", "--mode", "mock", "--from", "v1", "--to", "v2"]));
    assert_eq!(out, "Design System · Color: \"Dark Mode\" → \"Neon Green\"\n");
    let history = ok(&suif(d, &["history", "--session", "s1", "--mode", "mock", "--json"]));
    let rows: Value = serde_json::from_str(&history).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 3);
}

#[test]
fn recorded_generation_without_fixture_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&suif(d, &["set", "--session", "s1", "--mode", "mock", "--path", "product.goal", "unrecorded goal"]));
    let fx = fixtures();
    let out = suif(d, &["generate", "--session", "s1", "--mode", "recorded", "--fixtures", fx.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[FIXTURE_MISSING]:"));
}

#[test]
fn recorded_mode_needs_fixture_dir() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    let out = suif(dir.path(), &["history", "--session", "s1", "--mode", "recorded", "--fixtures", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[CONFIG_INVALID]:"));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(suif(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(suif(dir.path(), &["diff", "--session", "s1", "--from", "x", "--to", "v1"]).status.code(), Some(2));
    assert_eq!(suif(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn unknown_session_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = suif(dir.path(), &["history", "--session", "ghost", "--mode", "mock"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[UNKNOWN_SESSION]:"));
}

#[test]
fn live_mode_without_endpoint_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = suif(dir.path(), &["history", "--session", "s1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[CONFIG_INVALID]:"));
}

#[test]
fn export_and_import_between_data_dirs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(&suif(a.path(), &["set", "--session", "s1", "--mode", "mock", "--path", "product.goal", "g"]));
    let bundle = a.path().join("s1.json");
    ok(&suif(a.path(), &["export", "--session", "s1", "--mode", "mock", "--out", bundle.to_str().unwrap()]));
    let id = ok(&suif(b.path(), &["import", "--mode", "mock", "--in", bundle.to_str().unwrap()]));
    assert_eq!(id.trim(), "s1");
    for v in ["v0.json", "v1.json"] {
        let rel = Path::new("sessions/s1").join(v);
        assert_eq!(std::fs::read(a.path().join(&rel)).unwrap(), std::fs::read(b.path().join(&rel)).unwrap());
    }
    let again = ok(&suif(b.path(), &["import", "--mode", "mock", "--in", bundle.to_str().unwrap()]));
    assert_ne!(again.trim(), "s1");
}

#[test]
fn compile_prints_prompt_markdown() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&suif(d, &["set", "--session", "s1", "--mode", "mock", "--path", "product.description", "habit tracker app"]));
    let out = ok(&suif(d, &["compile", "--session", "s1", "--mode", "mock"]));
    assert_eq!(out, "## Product\n- Description: habit tracker app\n");
}
