//! One test per acceptance criterion. Each drives the `sbp` binary with the
//! criterion's preset, prints a PASS/FAIL line with the measured values and
//! asserts on the verdict the binary wrote.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

struct Outcome {
    status: String,
    verdict: Value,
}

fn sbp(args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_sbp"))
        .args(args)
        .output()
        .expect("spawning sbp");
    print!("{}", String::from_utf8_lossy(&out.stdout));
    eprint!("{}", String::from_utf8_lossy(&out.stderr));
    out.status.code().expect("exit code")
}

fn run_preset(command: &str, preset: &str, dir: &Path) -> Outcome {
    let code = sbp(&[command, "--preset", preset, "--out", dir.to_str().unwrap()]);
    let text = fs::read_to_string(dir.join("verdict.json"))
        .unwrap_or_else(|e| panic!("{preset}: no verdict.json (exit {code}): {e}"));
    let verdict: Value = serde_json::from_str(&text).unwrap();
    let status = verdict["status"].as_str().unwrap().to_string();
    Outcome { status, verdict }
}

/// Prints the criterion line plus one line per threshold check.
fn report(criterion: u8, name: &str, o: &Outcome) -> bool {
    let pass = o.status == "pass";
    println!("criterion {criterion} [{name}]: {}", if pass { "PASS" } else { "FAIL" });
    for v in o.verdict["variants"].as_array().unwrap() {
        for c in v["checks"].as_array().unwrap() {
            println!(
                "  {}: {} = {} ({}) {}",
                v["label"].as_str().unwrap(),
                c["metric"].as_str().unwrap(),
                c["value"],
                c["rule"].as_str().unwrap_or_default(),
                if c["pass"].as_bool() == Some(true) { "PASS" } else { "FAIL" }
            );
        }
        if let Some(e) = v["error"].as_str() {
            println!("  {}: error: {e}", v["label"].as_str().unwrap());
        }
    }
    pass
}

fn criterion(n: u8, command: &str, preset: &str) {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_preset(command, preset, tmp.path());
    assert!(report(n, preset, &o), "criterion {n} ({preset}) did not pass: {}", o.status);
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(files(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

#[test]
fn criterion_1_operator_identities() {
    criterion(1, "verify-ops", "identities");
}

#[test]
fn criterion_2_free_flow() {
    criterion(2, "verify-ops", "free-flow");
}

#[test]
fn criterion_3_conservation() {
    criterion(3, "run", "conservation");
}

#[test]
fn criterion_4_kernel() {
    criterion(4, "kernel-check", "kernel");
}

#[test]
fn criterion_5_decay_rate() {
    criterion(5, "decay", "decay");
}

#[test]
fn criterion_6_scattering_profile() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let o = run_preset("scattering", "scattering", &run);
    let pass = report(6, "scattering", &o);

    // the stored artifacts must reproduce the asymptotic check on their own
    let cmp = tmp.path().join("compare");
    let code = sbp(&["compare", "--from", run.to_str().unwrap(), "--out", cmp.to_str().unwrap()]);
    assert!(code <= 1, "compare exited with {code}");
    assert_eq!(
        fs::read_to_string(run.join("asymptotic.csv")).unwrap(),
        fs::read_to_string(cmp.join("compare.csv")).unwrap()
    );
    assert!(pass, "criterion 6 (scattering) did not pass: {}", o.status);
}

#[test]
fn criterion_7_profile_residual() {
    criterion(7, "residual", "residual");
}

#[test]
fn criterion_8_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let first = run_preset("run", "determinism", &a);
    let second = run_preset("run", "determinism", &b);

    // across processes as well as within one
    let fa = files(&a);
    let fb = files(&b);
    let mut identical = fa.len() == fb.len();
    for (x, y) in fa.iter().zip(&fb) {
        identical &= x.strip_prefix(&a).unwrap() == y.strip_prefix(&b).unwrap();
        identical &= fs::read(x).unwrap() == fs::read(y).unwrap();
    }
    let within = report(8, "determinism", &first) && second.status == "pass";
    println!("  across processes: {} files, identical = {identical}", fa.len());
    assert!(within && identical, "criterion 8 (determinism) did not pass");
}
