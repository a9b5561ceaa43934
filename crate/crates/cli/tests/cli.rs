//! End-to-end tests of the `stratmhd` binary: exit codes, artifact
//! layout, determinism, and report reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stratmhd"))
}

fn base_config(mode: &str, t_end: f64, dt: f64, stride: usize) -> String {
    format!(
        r#"
[physics]
kappa = 2.0
c0 = 0.15915494309189535

[grid]
l_x = 6.283185307179586
n_x = 32
n_y = 16
k_order = 7

[time]
dt = {dt}
t_end = {t_end}

[init]
epsilon0 = 1e-3
seed = 11
mode = "{mode}"
bg_phi = [0.0, 0.2]
bg_psi = [0.0, 0.1]

[output]
dealias = true
output_stride = {stride}
"#
    )
}

fn run_in(dir: &Path, config: &str) -> (Output, Option<std::path::PathBuf>) {
    let cfg_path = dir.join("config.toml");
    fs::write(&cfg_path, config).unwrap();
    let out_dir = dir.join("runs");
    let output = bin()
        .arg("run")
        .arg(&cfg_path)
        .arg("--out-dir")
        .arg(&out_dir)
        .output()
        .expect("binary runs");
    let run_dir = String::from_utf8_lossy(&output.stdout)
        .lines()
        .last()
        .map(|l| std::path::PathBuf::from(l.trim()))
        .filter(|p| p.is_dir());
    (output, run_dir)
}

#[test]
fn invalid_kappa_is_config_error_without_run_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = base_config("nonlinear", 5.0, 0.02, 25).replace("kappa = 2.0", "kappa = -1.0");
    let (output, _) = run_in(tmp.path(), &cfg);
    assert_eq!(output.status.code(), Some(2));
    // no run directory may exist
    let runs = tmp.path().join("runs");
    if runs.exists() {
        assert_eq!(fs::read_dir(&runs).unwrap().count(), 0);
    }
}

#[test]
fn low_order_requires_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = base_config("nonlinear", 5.0, 0.02, 25).replace("k_order = 7", "k_order = 3");
    let (output, _) = run_in(tmp.path(), &cfg);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn smoke_run_creates_required_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let (output, run_dir) = run_in(tmp.path(), &base_config("nonlinear", 5.0, 0.02, 25));
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let run_dir = run_dir.expect("run directory printed");
    for f in ["energy.csv", "decay.json", "manifest.json"] {
        assert!(run_dir.join(f).is_file(), "missing {f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["termination"], "completed");
    for f in manifest["files"].as_array().unwrap() {
        assert!(run_dir.join(f.as_str().unwrap()).is_file());
    }
}

#[test]
fn linear_mode_rate_matches_spectral_abscissa() {
    let tmp = tempfile::tempdir().unwrap();
    // long horizon so the fit window sits in the asymptotic regime where
    // the slowest (q = 1, overdamped) branch dominates the Sobolev norms
    let cfg = base_config("linear", 80.0, 0.05, 40)
        .replace("bg_phi = [0.0, 0.2]", "bg_phi = []")
        .replace("bg_psi = [0.0, 0.1]", "bg_psi = []");
    let (output, run_dir) = run_in(tmp.path(), &cfg);
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let decay: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run_dir.unwrap().join("decay.json")).unwrap())
            .unwrap();
    let rate = decay["rate"].as_f64().expect("fit succeeded");
    let c_kappa = decay["c_kappa"].as_f64().unwrap();
    assert!(
        (rate - c_kappa).abs() < 0.02,
        "fitted {rate} vs c_kappa {c_kappa}"
    );
}

#[test]
fn identical_config_and_seed_give_bit_identical_csv() {
    let tmp_a = tempfile::tempdir().unwrap();
    let tmp_b = tempfile::tempdir().unwrap();
    let cfg = base_config("nonlinear", 3.0, 0.02, 25);
    let (out_a, dir_a) = run_in(tmp_a.path(), &cfg);
    let (out_b, dir_b) = run_in(tmp_b.path(), &cfg);
    assert_eq!(out_a.status.code(), Some(0));
    assert_eq!(out_b.status.code(), Some(0));
    let a = fs::read(dir_a.unwrap().join("energy.csv")).unwrap();
    let b = fs::read(dir_b.unwrap().join("energy.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn report_is_reproducible_from_artifacts_alone() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, run_dir) = run_in(tmp.path(), &base_config("nonlinear", 5.0, 0.02, 25));
    let run_dir = run_dir.unwrap();
    let r1 = bin().arg("report").arg(&run_dir).output().unwrap();
    let r2 = bin().arg("report").arg(&run_dir).output().unwrap();
    assert_eq!(r1.status.code(), Some(0), "{r1:?}");
    assert_eq!(r1.stdout, r2.stdout);
}

#[test]
fn report_rejects_degenerate_or_tampered_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, run_dir) = run_in(tmp.path(), &base_config("nonlinear", 5.0, 0.02, 25));
    let run_dir = run_dir.unwrap();
    let csv_path = run_dir.join("energy.csv");
    let original = fs::read_to_string(&csv_path).unwrap();

    // single data row -> too few samples
    let mut lines = original.lines();
    let header = lines.next().unwrap();
    let first = lines.next().unwrap();
    fs::write(&csv_path, format!("{header}\n{first}\n")).unwrap();
    let out = bin().arg("report").arg(&run_dir).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("too few samples"));

    // negated E_4 column -> non-positive energy sample
    let tampered: String = original
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 2 {
                let mut cols: Vec<String> = l.split(',').map(str::to_string).collect();
                cols[2] = format!("-{}", cols[2]);
                cols.join(",")
            } else {
                l.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    fs::write(&csv_path, tampered).unwrap();
    let out = bin().arg("report").arg(&run_dir).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-positive energy sample"));
}

#[test]
fn background_mode_reports_background_norms_only() {
    let tmp = tempfile::tempdir().unwrap();
    let (output, run_dir) = run_in(tmp.path(), &base_config("background", 10.0, 0.05, 20));
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let text = fs::read_to_string(run_dir.unwrap().join("energy.csv")).unwrap();
    let last = text.lines().last().unwrap();
    let cols: Vec<f64> = last.split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(cols[1], 0.0); // E_k
    assert!(cols[9] > 0.0); // bg_phi_norm
}

#[test]
fn rates_subcommand_prints_known_values() {
    let out = bin()
        .args(["rates", "--kappa", "2", "--c0", "0.15915494309189535"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let alpha = v["alpha"].as_f64().unwrap();
    assert!((alpha - (2.0 - 3.0_f64.sqrt()) / 2.0).abs() < 1e-9);
}

#[test]
fn selftest_passes() {
    let out = bin().arg("selftest").output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
}

#[test]
fn thread_env_var_is_validated() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("config.toml");
    fs::write(&cfg_path, base_config("nonlinear", 3.0, 0.02, 25)).unwrap();
    let out = bin()
        .arg("run")
        .arg(&cfg_path)
        .arg("--out-dir")
        .arg(tmp.path().join("runs"))
        .env("THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
