use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_freebound"))
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

#[test]
fn list_fixtures_prints_one_row_per_config() {
    let out = bin().arg("list-fixtures").arg("--dir").arg(fixtures()).output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let n = std::fs::read_dir(fixtures())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "toml"))
        .count();
    assert_eq!(stdout.lines().count(), n);
    assert!(stdout.lines().any(|l| l.starts_with("minimal.toml\t")));
}

#[test]
fn minimal_run_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("run")
        .arg(fixtures().join("minimal.toml"))
        .arg("--output-dir")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("PASS uniqueness.max_pairwise"));
    assert!(tmp.path().join("manifest.json").is_file());
}

#[test]
fn invalid_config_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "resolutions = [17]\n[domain]\nkind = \"rectangle\"\nmin = [-1.0]\nmax = [1.0]\n[source]\nkind = \"constant\"\nvalue = 1.0\nq = 0.25\n").unwrap();
    let out = bin().arg("run").arg(&cfg).arg("--output-dir").arg(tmp.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("grows rapidly"), "{stderr}");
}

#[test]
fn missing_config_exits_two() {
    let out = bin().args(["run", "does/not/exist.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
