use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qlab(args: &[&str], out: Option<&Path>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_qlab"));
    c.args(args).env_remove("QLAB_OUT");
    if let Some(dir) = out {
        c.arg("--out").arg(dir);
    }
    c.output().unwrap()
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn configs_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn free_zonal_spectrum_is_k_k_plus_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = qlab(
        &["run", "spectrum", "--V", "0", "--manifold", "sphere-zonal", "--n", "2", "--K", "8"],
        Some(dir.path()),
    );
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let mut r = csv::Reader::from_path(dir.path().join("eigenvalues.csv")).unwrap();
    let ev: Vec<f64> = r.records().map(|rec| rec.unwrap()[1].parse().unwrap()).collect();
    let want: Vec<f64> = (0..=8).map(|k| (k * (k + 1)) as f64).collect();
    assert_eq!(ev.len(), want.len());
    for (a, b) in ev.iter().zip(&want) {
        assert!((a - b).abs() <= 1e-9 * (1.0 + b), "{a} vs {b}");
    }
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["K"], 8);
    assert!(report["version"].as_str().unwrap().starts_with(env!("CARGO_PKG_VERSION")));
    assert!(report["runtime_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn counterexample_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = qlab(&["counterexample", "--n", "3", "--K", "128"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(report["details"]["residual_max"].as_f64().unwrap() < 1e-8);
    assert_eq!(report["details"]["kato_verdict"], "not-in-kato");
    assert_eq!(report["verdict"], "pass");
}

#[test]
fn unknown_experiment_lists_names() {
    let o = qlab(&["run", "spectrim"], None);
    assert_eq!(o.status.code(), Some(1));
    let t = text(&o);
    assert!(t.contains("spectrum") && t.contains("resolvent-probe"), "{t}");
    let o = qlab(&["spectrim"], None);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn list_is_deterministic() {
    let a = qlab(&["list"], None);
    let b = qlab(&["list"], None);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8_lossy(&a.stdout).contains("strichartz"));
}

#[test]
fn shipped_configs_validate_cleanly() {
    let mut args = vec!["validate".to_string()];
    for e in fs::read_dir(configs_dir()).unwrap() {
        args.push(e.unwrap().path().display().to_string());
    }
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = qlab(&args, None);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(text(&o).lines().all(|l| l.ends_with(": ok")), "{}", text(&o));
}

#[test]
fn small_truncation_is_diagnosed() {
    let o = qlab(&["validate", "projector-norms", "--K", "0"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("truncation too small"), "{}", text(&o));
    let o = qlab(&["run", "projector-norms", "--K", "0"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("truncation too small"));
}

#[test]
fn config_typos_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "experiment = \"heat\"\nK = 32\nlamdas = [1.0]\n").unwrap();
    let o = qlab(&["validate", path.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    let t = text(&o);
    assert!(t.contains("line 3") && t.contains("lamdas"), "{t}");
}

#[test]
fn failed_verdict_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // a tolerance no fit can meet
    let o = qlab(&["heat", "--tolerances.slope", "1e-9"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn env_out_overrides_flag() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_qlab"))
        .args(["spectrum", "--K", "4", "--out"])
        .arg(flag_dir.path())
        .env("QLAB_OUT", env_dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(env_dir.path().join("eigenvalues.csv").exists());
    assert!(!flag_dir.path().join("eigenvalues.csv").exists());
}

#[test]
fn seeded_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = configs_dir().join("square-function.toml");
    for d in [&a, &b] {
        let o = qlab(&["run", "--config", cfg.to_str().unwrap(), "--jobs", "2"], Some(d.path()));
        assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    }
    for e in fs::read_dir(a.path()).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "csv") {
            let q = b.path().join(p.file_name().unwrap());
            assert_eq!(fs::read(&p).unwrap(), fs::read(q).unwrap(), "{}", p.display());
        }
    }
}
