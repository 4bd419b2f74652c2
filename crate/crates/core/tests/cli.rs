use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use porosurf_core::cli::Config;
use porosurf_core::material::{skin_depth, COPPER_CONDUCTIVITY};

fn porosurf(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_porosurf"))
        .args(args)
        .arg("--output-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn read_table(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn shipped_default_config_matches_builtin() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    let text = fs::read_to_string(path).unwrap();
    assert_eq!(
        Config::from_toml(&text, "default.toml").unwrap(),
        Config::default()
    );
}

#[test]
fn design_table_writes_six_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = porosurf(&["design-table", "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty(), "quiet prints nothing");
    let rows = read_table(&dir.path().join("design_table.csv"));
    assert_eq!(rows.len(), 6);
    assert!(dir.path().join("manifest.toml").exists());
}

#[test]
fn vacuum_dielectric_reports_each_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[surface]\neps_r = 1.0\n");
    let out = porosurf(&["design-table", "-q", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(5));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(
        stderr.matches("infeasible thickness").count(),
        6,
        "{stderr}"
    );
    for row in read_table(&dir.path().join("design_table.csv")) {
        assert_eq!(row[4].parse::<f64>().unwrap(), 1.0);
        assert!(row[5].is_empty());
        assert!(row[6].contains("infeasible"));
    }
}

#[test]
fn halving_the_target_halves_thickness() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full");
    let half = dir.path().join("half");
    assert_eq!(
        porosurf(&["design-table", "-q"], &full).status.code(),
        Some(0)
    );
    let cfg = write_config(dir.path(), "[surface]\nx_target = 135.0\n");
    assert_eq!(
        porosurf(&["design-table", "-q", "-c", &cfg], &half)
            .status
            .code(),
        Some(0)
    );
    let delta_mm = skin_depth(COPPER_CONDUCTIVITY, 26e9).unwrap() * 1e3;
    for (a, b) in read_table(&full.join("design_table.csv"))
        .iter()
        .zip(read_table(&half.join("design_table.csv")))
    {
        let eps: f64 = a[4].parse().unwrap();
        let h_full: f64 = a[5].parse().unwrap();
        let h_half: f64 = b[5].parse().unwrap();
        // the skin term does not scale with the target
        let skin = eps / (eps - 1.0) * delta_mm / 4.0;
        assert!(
            (h_half - h_full / 2.0 + skin).abs() < 1e-7,
            "{h_half} vs {h_full}"
        );
    }
}

#[test]
fn dry_run_writes_manifest_and_geometry_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[simulation]\ngrid_step = 1e-4\n");
    let before = fs::read(&cfg).unwrap();
    let out = porosurf(
        &["simulate", "--model", "4", "--dry-run", "-q", "-c", &cfg],
        &dir.path().join("o"),
    );
    assert_eq!(out.status.code(), Some(0));
    let mut names: Vec<String> = fs::read_dir(dir.path().join("o"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["manifest.toml", "model4_geometry.txt"]);
    assert_eq!(
        fs::read(&cfg).unwrap(),
        before,
        "config must not be modified"
    );
    let manifest = fs::read_to_string(dir.path().join("o/manifest.toml")).unwrap();
    assert!(manifest.contains("command = \"simulate\""));
    assert!(manifest.contains("background_index = 1.28"));
}

#[test]
fn every_command_honours_dry_run() {
    for args in [
        &["design-table"][..],
        &["simulate", "-m", "0"],
        &["compare", "--models", "0,1"],
        &["sweep", "-m", "5"],
        &["validate"],
    ] {
        let dir = tempfile::tempdir().unwrap();
        let mut full = args.to_vec();
        full.extend(["--dry-run", "--quiet"]);
        let out = porosurf(&full, dir.path());
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        assert!(out.stdout.is_empty() && out.stderr.is_empty(), "{args:?}");
        assert!(dir.path().join("manifest.toml").exists(), "{args:?}");
        assert!(!dir.path().join("design_table.csv").exists());
        assert!(!dir.path().join("validation.txt").exists());
    }
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let out = porosurf(
        &["design-table", "-c", missing.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.toml"));

    let cfg = write_config(
        dir.path(),
        "[simulation]\ngrid_step = 0.1e-3\ngridstep = 2\n",
    );
    let out = porosurf(&["design-table", "-c", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("gridstep"), "{err}");

    assert_eq!(
        porosurf(&["compare", "--models", "3"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        porosurf(&["sweep", "-m", "5", "-n", "1"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        porosurf(&["simulate", "-m", "7"], dir.path()).status.code(),
        Some(3)
    );
    assert_eq!(porosurf(&["bogus"], dir.path()).status.code(), Some(2));
}

#[test]
fn sweep_resolution_error_is_immediate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[simulation]\ngrid_step = 0.45e-3\n");
    let out = porosurf(&["sweep", "-m", "0", "-q", "-c", &cfg], dir.path());
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn coarse_grid_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[simulation]\ngrid_step = 0.25e-3\n");
    let out = porosurf(&["validate", "-c", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(6));
    let report = fs::read_to_string(dir.path().join("validation.txt")).unwrap();
    assert!(
        report.contains("[FAIL] rasterization resolution"),
        "{report}"
    );
    assert!(report.contains("[PASS] cylinder oracle"), "{report}");
    assert!(report.contains("<= 0.050000"), "{report}");
    let csv = fs::read_to_string(dir.path().join("validation.csv")).unwrap();
    assert_eq!(csv.lines().count(), 9);
}
