use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sbp(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbp"))
        .args(args)
        .env("SBP_OUTPUT_ROOT", root)
        .output()
        .expect("spawning sbp")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn verdict(dir: &Path) -> serde_json::Value {
    let text = fs::read_to_string(dir.join("verdict.json")).expect("verdict.json");
    serde_json::from_str(&text).unwrap()
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
fn zero_length_run_writes_its_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let o = sbp(tmp.path(), &["run", "--n", "64", "--box", "40", "--width", "2", "--t-end", "0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let dir = tmp.path().join("run");
    for name in ["config.txt", "records.csv", "final.sbpf", "verdict.json"] {
        assert!(dir.join(name).exists(), "{name}");
    }
    let v = verdict(&dir);
    assert_eq!(v["schema"], "sbp-verdict");
    assert_eq!(v["version"], 1);
    assert_eq!(v["status"], "pass");
    assert!(!dir.join(".sbp.lock").exists());
}

#[test]
fn output_root_comes_from_the_environment_unless_out_is_given() {
    let tmp = tempfile::tempdir().unwrap();
    let explicit = tmp.path().join("elsewhere");
    let o = sbp(
        tmp.path(),
        &["run", "--n", "64", "--box", "40", "--width", "2", "--t-end", "0", "--out", explicit.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(explicit.join("verdict.json").exists());
    assert!(!tmp.path().join("run").exists());
}

#[test]
fn identity_suite_passes_its_preset() {
    let tmp = tempfile::tempdir().unwrap();
    let o = sbp(tmp.path(), &["verify-ops", "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = verdict(&tmp.path().join("identities"));
    assert_eq!(v["criterion"], 1);
    assert_eq!(v["status"], "pass");
}

#[test]
fn forbidden_gamma_in_3d_names_the_config_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    fs::write(&cfg, "# 3D run\ndim = 3\ngamma = 1.7\nn = 32\n").unwrap();
    let o = sbp(tmp.path(), &["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("bad.cfg:3"), "{err}");
    assert!(err.contains("gamma"), "{err}");

    let o = sbp(tmp.path(), &["run", "--dim", "3", "--gamma", "1.7"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--gamma"), "{}", stderr(&o));
}

#[test]
fn malformed_config_reports_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("broken.cfg");
    fs::write(&cfg, "n = 64\n\nthis line has no separator\n").unwrap();
    let o = sbp(tmp.path(), &["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("broken.cfg:3"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        &["run", "--no-such-flag"][..],
        &["frobnicate"],
        &["run", "--set", "nonsense=1"],
        &["run", "--n", "sixty"],
        &["decay", "--preset", "identities"],
    ] {
        let o = sbp(tmp.path(), args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn a_locked_output_directory_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("busy");
    fs::create_dir_all(&dir).unwrap();
    fs::write(dir.join(".sbp.lock"), "1\n").unwrap();
    let o = sbp(
        tmp.path(),
        &["run", "--n", "64", "--box", "40", "--width", "2", "--t-end", "0", "--out", dir.to_str().unwrap()],
    );
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("in use"), "{}", stderr(&o));
    assert!(!dir.join("verdict.json").exists());
}

#[test]
fn seeded_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        vec![
            "run".to_string(),
            "--n".into(),
            "64".into(),
            "--box".into(),
            "40".into(),
            "--dt".into(),
            "0.02".into(),
            "--t-end".into(),
            "1".into(),
            "--seed".into(),
            "5".into(),
            "--width".into(),
            "2".into(),
            "--set".into(),
            "diagnostics=on".into(),
            "--set".into(),
            "snapshot_stride=10".into(),
            "--out".into(),
            out.to_string(),
        ]
    };
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let argv = args(dir.to_str().unwrap());
        let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
        let o = sbp(tmp.path(), &argv);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let fa = files(&a);
    let fb = files(&b);
    assert_eq!(fa.len(), fb.len());
    assert!(fa.len() >= 4);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.strip_prefix(&a).unwrap(), y.strip_prefix(&b).unwrap());
        if x.file_name().unwrap() == "verdict.json" {
            continue;
        }
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
    }
}

#[test]
fn compare_reproduces_the_stored_asymptotic_table() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("scat");
    let o = sbp(
        tmp.path(),
        &[
            "scattering",
            "--n",
            "128",
            "--box",
            "auto",
            "--width",
            "4",
            "--dt",
            "0.1",
            "--t-end",
            "16",
            "--set",
            "dyadic_times=2,4,8",
            "--set",
            "log_per_octave=4",
            "--out",
            run.to_str().unwrap(),
        ],
    );
    // thresholds may fail on so short a run; only aborts and usage errors matter here
    assert!(code(&o) <= 1, "{}", stderr(&o));
    for name in ["w.sbpf", "potential.sbpf", "asymptotic.csv", "dyadic.csv", "samples/u_t8.sbpf"] {
        assert!(run.join(name).exists(), "{name}");
    }

    let cmp = tmp.path().join("cmp");
    let o = sbp(tmp.path(), &["compare", "--from", run.to_str().unwrap(), "--out", cmp.to_str().unwrap()]);
    assert!(code(&o) <= 1, "{}", stderr(&o));
    assert_eq!(
        fs::read_to_string(run.join("asymptotic.csv")).unwrap(),
        fs::read_to_string(cmp.join("compare.csv")).unwrap()
    );
    let stored = verdict(&run);
    let again = verdict(&cmp);
    let m = |v: &serde_json::Value, k: &str| v["variants"][0]["metrics"][k].clone();
    for k in ["asymptotic_2", "asymptotic_4", "asymptotic_8", "asymptotic_decreasing"] {
        assert_eq!(m(&stored, k), m(&again, k), "{k}");
    }
}

#[test]
fn listing_commands_succeed() {
    let tmp = tempfile::tempdir().unwrap();
    let o = sbp(tmp.path(), &["presets"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for name in ["identities", "free-flow", "conservation", "kernel", "decay", "scattering", "residual", "determinism"] {
        assert!(text.contains(name), "{name}");
    }
    let o = sbp(tmp.path(), &["keys"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("snapshot_stride"));
}
