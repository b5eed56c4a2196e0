use std::process::{Command, Output};

fn qlpde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlpde")).args(args).output().expect("spawn qlpde")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

#[test]
fn scenario_run_writes_a_manifest_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = qlpde(&["run", "--scenario", "heat_smoke", "--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(dir.path().join("manifest.json").exists());

    let again = qlpde(&["inspect", dir.path().to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0));
    assert!(text(&again.stdout).contains("heat_smoke"));

    let same = dir.path().to_str().unwrap();
    assert_eq!(qlpde(&["diff", same, same]).status.code(), Some(0));
}

#[test]
fn bad_exponent_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let dump = qlpde(&["scenarios", "--dump", "porous_local"]);
    assert_eq!(dump.status.code(), Some(0));
    let cfg = text(&dump.stdout);
    let broken = cfg
        .lines()
        .map(|l| if l.trim_start().starts_with("q =") { "q = 2.0".to_string() } else { l.to_string() })
        .collect::<Vec<_>>()
        .join("\n");
    assert_ne!(broken, cfg.trim_end());
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, broken).unwrap();

    let out = qlpde(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("fixed_point.q"), "{}", text(&out.stderr));
}

#[test]
fn unknown_suite_lists_the_choices() {
    let out = qlpde(&["suite", "everything"]);
    assert_eq!(out.status.code(), Some(2));
    let err = text(&out.stderr);
    for s in ["acceptance", "invariants", "convergence"] {
        assert!(err.contains(s), "{err}");
    }
}

#[test]
fn missing_config_file_is_reported() {
    let out = qlpde(&["run", "/nonexistent/qlpde.toml"]);
    assert_ne!(out.status.code(), Some(0));
    assert!(text(&out.stderr).starts_with("error:"));
}
