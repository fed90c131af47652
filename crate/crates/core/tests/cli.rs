use std::fs;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use projective_dpt::cli::config::parse_manifest;
use projective_dpt::cli::runner::{CampaignReport, CheckRecord};
use proptest::prelude::*;

fn pdpt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdpt")).args(args).output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn run_in(dir: &Path, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("campaign.json");
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let mut args = vec!["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    pdpt(&args)
}

fn report(dir: &Path) -> CampaignReport {
    serde_json::from_str(&fs::read_to_string(dir.join("out/reports.json")).unwrap()).unwrap()
}

const SMALL: &str = r#"{
  "name": "small",
  "seed": 7,
  "experiments": [
    {
      "kind": "solve",
      "id": "bump",
      "problem": {
        "gas": {"d": 1, "gamma": 3.0, "model": {"kind": "isentropic", "a": 1.0}},
        "init": "cos-bump",
        "domain": [[-6, 6]],
        "cells": [200],
        "t_end": 1.0,
        "steps": 40,
        "scheme": "muscl"
      }
    },
    {"kind": "verify", "id": "bounds", "flow": "bump", "checks": ["precis", "estihp", "inertia", "functionals"]},
    {"kind": "verify", "id": "beams", "kinetic": {"state": "two-beam", "particles": 40}, "checks": ["kinetic-det", "inertia-regression"]},
    {"kind": "transform", "id": "quartic", "source": {"potential": "quartic"}, "alphas": [0.5, 1.0], "t": [0.2, 1.0], "x": [[0.5, 1.5]]},
    {"kind": "verify", "id": "ref", "suite": ["push-forward-worked-value", "uncert-indicator", "two-beam-enumeration"]}
  ]
}"#;

#[test]
fn empty_campaign_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "{}", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/summary.csv")).unwrap();
    assert_eq!(csv, format!("{}\n", CampaignReport::CSV_HEADER));
    assert!(report(dir.path()).records.is_empty());
}

#[test]
fn broken_config_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let broken = SMALL.replace("\"t_end\": 1.0,", "\"t_end\": 1.0");
    let out = run_in(dir.path(), &broken, &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = text(&out.stderr);
    assert!(err.contains("campaign.json:14:"), "{err}");

    let bad_check = SMALL.replace("\"uncert-indicator\"", "\"no-such-check\"");
    let out = run_in(dir.path(), &bad_check, &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = text(&out.stderr);
    assert!(err.contains("campaign.json:21:") && err.contains("no-such-check"), "{err}");

    assert_eq!(pdpt(&["run", "--config", "/no/such/file.json", "--out", "x"]).status.code(), Some(2));
    assert_eq!(pdpt(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn list_shows_catalog_and_checks() {
    let out = pdpt(&["list"]);
    assert_eq!(out.status.code(), Some(0));
    let s = text(&out.stdout);
    for name in ["quadratic", "gaussian-bump", "two-beam", "warm-beams", "push-forward-worked-value"] {
        assert!(s.contains(name), "missing {name}");
    }
    let out = pdpt(&["list", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["potentials"].as_array().unwrap().iter().any(|e| e["name"] == "exp-cosh"));
    assert!(v["checks"].as_array().unwrap().len() >= 50);
}

#[test]
fn small_campaign_passes_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = run_in(a.path(), SMALL, &[]);
    assert_eq!(out.status.code(), Some(0), "{}{}", text(&out.stdout), text(&out.stderr));
    assert_eq!(run_in(b.path(), SMALL, &["--workers", "2"]).status.code(), Some(0));
    let first = fs::read(a.path().join("out/reports.json")).unwrap();
    assert_eq!(first, fs::read(b.path().join("out/reports.json")).unwrap());

    // a second run in the same directory reuses the cached flow
    assert!(a.path().join("out/bump.flow.pdpt").exists());
    assert_eq!(run_in(a.path(), SMALL, &[]).status.code(), Some(0));
    assert_eq!(first, fs::read(a.path().join("out/reports.json")).unwrap());

    let r = report(a.path());
    let names: Vec<&str> = r.records.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names[0], "bump/solve");
    assert!(names.contains(&"quartic/alpha=0.5") && names.contains(&"ref/uncert-indicator"));
    let csv = fs::read_to_string(a.path().join("out/summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), r.records.len() + 1);

    // the transform dump is readable in every format
    let dump = a.path().join("out/quartic.alpha-1.pdpt");
    let dump = dump.to_str().unwrap();
    assert!(text(&pdpt(&["dump", dump]).stdout).contains("components 3"));
    let csv = text(&pdpt(&["dump", dump, "--format", "csv"]).stdout);
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 64 * 64 + 1);
    let v: serde_json::Value = serde_json::from_slice(&pdpt(&["dump", dump, "--format", "json"]).stdout).unwrap();
    assert_eq!(v["ncomp"], 3);

    // a reader that closes the pipe early does not make the command fail
    let mut child = Command::new(env!("CARGO_BIN_EXE_pdpt"))
        .args(["dump", dump, "--format", "csv"])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    drop(child.stdout.take());
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(out.stderr.is_empty());
}

#[test]
fn only_filter_and_failures() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), SMALL, &["--only", "bounds/precis"]);
    assert_eq!(out.status.code(), Some(0));
    let names: Vec<String> = report(dir.path()).records.into_iter().map(|r| r.name).collect();
    assert_eq!(names, vec!["bounds/precis".to_string()]);

    // a budget far below the implied constants fails the bounds, not the run
    let strict = SMALL.replace("\"seed\": 7,", "\"seed\": 7, \"budget\": 1e-6,");
    let out = run_in(dir.path(), &strict, &["--only", "bounds/"]);
    assert_eq!(out.status.code(), Some(1));
    let err = text(&out.stderr);
    assert!(err.contains("FAILED bounds/estihp"), "{err}");
    let failed: Vec<CheckRecord> = report(dir.path()).records.into_iter().filter(|r| !r.passed).collect();
    assert!(failed.iter().all(|r| r.implied_constant.unwrap() > 1e-6));
}

#[test]
fn reference_suite_parses() {
    let out = pdpt(&["list", "--config", "reference-suite"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parser_errors_stay_inside_the_file(cut in 0usize..SMALL.len(), junk in "[ -~]{0,3}") {
        prop_assume!(SMALL.is_char_boundary(cut));
        let text = format!("{}{}{}", &SMALL[..cut], junk, &SMALL[cut..]);
        if let Err(e) = parse_manifest(&text) {
            prop_assert!(e.line >= 1 && e.line <= text.lines().count().max(1), "{e}");
            prop_assert!(e.column >= 1);
        }
    }
}
