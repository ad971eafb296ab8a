//! End-to-end runs of the binary on the bundled configs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nv_eddy::analysis::find_local_maxima;
use nv_eddy::scan::{intensity_from_pgm, read_grid_csv};
use nv_eddy_cli::{read_manifest, sha256_file};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nv-eddy"))
}

fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scan_into(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["scan", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    o
}

/// A copy of a bundled config with one line replaced, pointing back at the bundled files.
fn edited_config(dir: &Path, name: &str, from: &str, to: &str) -> PathBuf {
    let text = fs::read_to_string(assets().join(name)).unwrap();
    assert!(text.contains(from), "{from} not in {name}");
    let a = assets();
    let text = text
        .replace(from, to)
        .replace("file = ", &format!("file = {}/", a.display()));
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn every_command_has_help() {
    for cmd in [&["--help"][..], &["scan", "--help"], &["resolution", "--help"], &["bandwidth", "--help"],
        &["sensitivity", "--help"], &["skin-depth", "--help"]]
    {
        let dir = tempfile::tempdir().unwrap();
        let o = bin().args(cmd).current_dir(dir.path()).output().unwrap();
        assert!(o.status.success(), "{cmd:?}: {}", stderr(&o));
        assert!(!o.stdout.is_empty());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0, "{cmd:?} wrote files");
    }
}

#[test]
fn missing_config_is_a_usage_error_naming_the_path() {
    let o = run(&["scan", "--config", "/definitely/not/here.conf"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/definitely/not/here.conf"), "{}", stderr(&o));
}

#[test]
fn missing_pattern_file_is_a_usage_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited_config(dir.path(), "fifteen_dots.conf", "fifteen_dots.pgm", "no_such_art.pgm");
    let o = run(&["scan", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no_such_art.pgm"), "{}", stderr(&o));
}

#[test]
fn unit_mismatch_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited_config(dir.path(), "sensitivity.conf", "frequency = 3.5e6 Hz\n\n[sensitivity]", "frequency = 3.5e6 T\n\n[sensitivity]");
    let o = run(&["sensitivity", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("frequency"), "{}", stderr(&o));
}

#[test]
fn zero_threads_is_a_usage_error() {
    let o = run(&["skin-depth", "--sigma", "1e7", "--frequency", "1e6", "--threads", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dot_scan_is_reproducible_and_manifest_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = assets().join("fifteen_dots.conf");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    scan_into(&cfg, &a, &["--threads", "1"]);
    scan_into(&cfg, &b, &["--threads", "3"]);
    for name in ["R.csv", "theta.csv", "R.pgm", "theta.pgm"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
    }

    let sums = read_manifest(&a.join("manifest.txt")).unwrap();
    assert_eq!(sums.len(), 6);
    for (name, sum) in &sums {
        assert_eq!(&sha256_file(&a.join(name)).unwrap(), sum, "{name}");
    }
    let text = fs::read_to_string(a.join("manifest.txt")).unwrap();
    for key in ["seed = 1", "version = ", "input.config = sha256:", "input.pattern = sha256:"] {
        assert!(text.contains(key), "manifest lacks {key}");
    }

    let levels = intensity_from_pgm(a.join("R.pgm")).unwrap();
    assert_eq!(find_local_maxima(&levels, 0.5, 10).len(), 15);
}

#[test]
fn wheel_scan_support_matches_artwork() {
    let dir = tempfile::tempdir().unwrap();
    scan_into(&assets().join("mainz.conf"), dir.path(), &[]);
    let r = read_grid_csv(dir.path().join("R.csv")).unwrap().values;
    let art = intensity_from_pgm(assets().join("mainz_wheel.pgm")).unwrap();
    assert_eq!(r.dim(), art.dim());
    let half = r.iter().cloned().fold(0.0, f64::max) / 2.0;
    let (mut both, mut either) = (0usize, 0usize);
    for (v, a) in r.iter().zip(art.iter()) {
        let (s, m) = (*v >= half, *a > 0.5);
        both += (s && m) as usize;
        either += (s || m) as usize;
    }
    let iou = both as f64 / either as f64;
    println!("IoU = {iou:.3}");
    assert!(iou >= 0.7, "IoU {iou}");
}

#[test]
fn resolution_from_scan_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = assets().join("fifteen_dots.conf");
    let scan_dir = dir.path().join("scan");
    scan_into(&cfg, &scan_dir, &[]);
    let out = dir.path().join("res");
    let o = run(&["resolution", "--config", cfg.to_str().unwrap(), "--image",
        scan_dir.join("R.csv").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = fs::read_to_string(out.join("resolution.txt")).unwrap();
    assert!(report.contains("centers = 15"));
    let fwhm: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("fwhm_m = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((200e-6..=500e-6).contains(&fwhm), "{fwhm}");
    let profile = fs::read_to_string(out.join("profile.csv")).unwrap();
    assert!(profile.starts_with("position_m,value,model\n"));
}

#[test]
fn explicit_centers_must_carry_a_unit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited_config(dir.path(), "fifteen_dots.conf", "centers = auto", "centers = 0 0; 1e-3 0");
    let o = run(&["resolution", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn bandwidth_reports_unbounded_without_pump() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["bandwidth", "--config", assets().join("sensitivity.conf").to_str().unwrap(),
        "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = fs::read_to_string(dir.path().join("bandwidth.txt")).unwrap();
    assert!(report.contains("pump.0.fitted_cutoff_Hz = unbounded"), "{report}");
    assert!(report.contains("pump.3.fitted_cutoff_Hz = 2."), "{report}");
    let again = tempfile::tempdir().unwrap();
    run(&["bandwidth", "--config", assets().join("sensitivity.conf").to_str().unwrap(),
        "--out", again.path().to_str().unwrap()]);
    assert_eq!(fs::read(dir.path().join("bandwidth.csv")).unwrap(), fs::read(again.path().join("bandwidth.csv")).unwrap());
}

#[test]
fn skin_depth_table() {
    let o = run(&["skin-depth", "--sigma", "5.96e7", "--sigma", "3.77e7", "--frequency", "3.5e6"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    let o = run(&["skin-depth"]);
    assert_eq!(o.status.code(), Some(2));
}
