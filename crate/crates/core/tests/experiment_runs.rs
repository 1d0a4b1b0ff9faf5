use std::fs;
use std::path::{Path, PathBuf};

use freebound::experiment::{list_fixtures, run, run_config, ExperimentConfig, RunOptions};
use freebound::Error;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn opts(dir: &Path) -> RunOptions {
    RunOptions {
        output_dir: Some(dir.to_path_buf()),
        seed: None,
        quiet: true,
    }
}

#[test]
fn minimal_run_writes_zero_solution() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = run(&fixtures().join("minimal.toml"), &opts(tmp.path())).unwrap();
    assert!(manifest.all_passed);
    assert!(tmp.path().join("manifest.json").is_file());
    for f in &manifest.files {
        assert!(f.is_file(), "{} missing", f.display());
    }
    let mut rdr = csv::Reader::from_path(tmp.path().join("res17/solution.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "u").unwrap();
    let mut rows = 0;
    for rec in rdr.records() {
        let u: f64 = rec.unwrap()[col].parse().unwrap();
        assert_eq!(u, 0.0);
        rows += 1;
    }
    assert_eq!(rows, 17);
}

#[test]
fn runs_are_byte_identical() {
    let path = fixtures().join("oracle_small_2d.toml");
    let text = fs::read_to_string(&path).unwrap();
    let cfg = ExperimentConfig::from_toml(&text).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (ma, _) = run_config(&cfg, &path, &text, &opts(a.path())).unwrap();
    let (mb, _) = run_config(&cfg, &path, &text, &opts(b.path())).unwrap();
    assert!(ma.all_passed);
    assert_eq!(ma.files.len(), mb.files.len());
    for (fa, fb) in ma.files.iter().zip(&mb.files) {
        if fa.extension().is_some_and(|e| e == "csv") {
            assert_eq!(fs::read(fa).unwrap(), fs::read(fb).unwrap(), "{}", fa.display());
        }
    }
    assert_eq!(ma.config_sha256, mb.config_sha256);
}

#[test]
fn borderline_integrability_is_rejected() {
    let text = fs::read_to_string(fixtures().join("minimal.toml"))
        .unwrap()
        .replace("value = 0.0", "value = 0.0\nq = 0.5");
    match ExperimentConfig::from_toml(&text) {
        Err(Error::Regime { .. }) => {}
        other => panic!("expected a regime error, got {other:?}"),
    }
}

#[test]
fn every_fixture_is_listed_and_described() {
    let dir = fixtures();
    let tomls = fs::read_dir(&dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "toml"))
        .count();
    let rows = list_fixtures(&dir).unwrap();
    assert_eq!(rows.len(), tomls);
    for r in &rows {
        assert!(!r.exercises.trim().is_empty(), "{}", r.file);
        assert!(!r.expected.trim().is_empty(), "{}", r.file);
        ExperimentConfig::load(&dir.join(&r.file)).unwrap();
    }
}
