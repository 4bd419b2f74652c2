//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits non-zero if any of them failed.

use std::cell::Cell;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use proptest::test_runner::{Config as RunnerConfig, RngAlgorithm, TestRng, TestRunner};

use porosurf_core::analysis::{band_metrics, path_loss_fit, CenterlineProfile, Spectrum};
use porosurf_core::cli::checks::ORACLE_GRID_STEP;
use porosurf_core::cli::Config;
use porosurf_core::design::design_table;
use porosurf_core::geometry::{porosity_of, LatticeParams};
use porosurf_core::material::{skin_reactance, solve_thickness, surface_reactance};
use porosurf_core::oracle::{
    boundary_reflection, cylinder_error, spreading_ratio, CYLINDER_RADIUS,
};

const POROSITY_PCT: [f64; 6] = [0.0, 7.85, 11.78, 15.71, 19.63, 39.26];
const EPS_EFF: [f64; 6] = [2.10, 2.00, 1.95, 1.91, 1.86, 1.63];
const H_MM: [f64; 6] = [2.50, 2.63, 2.69, 2.77, 2.85, 3.40];

type Verdict = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Verdict);

fn porosurf(args: &[&str], out: &Path) -> Result<(), String> {
    let output = Command::new(env!("CARGO_BIN_EXE_porosurf"))
        .args(args)
        .args(["--quiet", "--output-dir"])
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if output.status.success() {
        Ok(())
    } else {
        Err(format!(
            "porosurf {} exited with {:?}: {}",
            args.join(" "),
            output.status.code(),
            String::from_utf8_lossy(&output.stderr).trim()
        ))
    }
}

fn csv_rows(path: &Path) -> Result<Vec<Vec<String>>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect())
}

fn field(row: &[String], k: usize) -> Result<f64, String> {
    row.get(k)
        .ok_or_else(|| format!("missing column {k}"))?
        .parse()
        .map_err(|e| format!("column {k}: {e}"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir()
        .join(format!("porosurf-acceptance-{}", std::process::id()))
        .join(name);
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn write_config(dir: &Path, text: &str) -> Result<String, String> {
    fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    let path = dir.join("config.toml");
    fs::write(&path, text).map_err(|e| e.to_string())?;
    Ok(path.to_string_lossy().into_owned())
}

fn design_table_regression() -> Verdict {
    let config = Config::default();
    let models: Vec<LatticeParams> = (0..=5).map(|m| LatticeParams::model(m).unwrap()).collect();
    let rows = design_table(&config.surface, &models).map_err(|e| e.to_string())?;
    let mut worst_eps: f64 = 0.0;
    let mut worst_h: f64 = 0.0;
    let mut ok = true;
    for (k, row) in rows.iter().enumerate() {
        let eps = row.eps_eff.ok_or("missing permittivity")?;
        let h = row.h.ok_or_else(|| row.note.clone().unwrap_or_default())? * 1e3;
        ok &= (eps * 100.0).round() == (EPS_EFF[k] * 100.0).round();
        ok &= (h - H_MM[k]).abs() <= 0.02;
        worst_eps = worst_eps.max((eps - EPS_EFF[k]).abs());
        worst_h = worst_h.max((h - H_MM[k]).abs());
    }
    Ok((
        ok,
        format!("max |eps - ref| {worst_eps:.4}, max |h - ref| {worst_h:.4} mm (tol 0.02 mm)"),
    ))
}

fn porosity_regression() -> Verdict {
    let mut worst: f64 = 0.0;
    for (m, expected) in (0..=5).zip(POROSITY_PCT) {
        let p = LatticeParams::model(m).unwrap();
        let rho = if m == 0 {
            0.0
        } else {
            porosity_of(p.w_l, p.w_h, p.r, p.interleaved).map_err(|e| e.to_string())? * 100.0
        };
        worst = worst.max((rho - expected).abs());
    }
    Ok((
        worst < 0.05,
        format!("max deviation {worst:.4} pp (tol 0.05 pp)"),
    ))
}

fn thickness_round_trip() -> Verdict {
    let mut runner = TestRunner::new_with_rng(
        RunnerConfig {
            cases: 1000,
            failure_persistence: None,
            ..RunnerConfig::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    let worst = Cell::new(0.0f64);
    let count = Cell::new(0usize);
    let strategy = (
        1.001f64..4.0,
        1e9f64..100e9,
        0.1e-6f64..10e-6,
        1.0f64..600.0,
    );
    let result = runner.run(&strategy, |(eps_eff, f, delta, extra)| {
        let target = skin_reactance(f, delta) + extra;
        let h = solve_thickness(eps_eff, f, delta, target).unwrap();
        let x = surface_reactance(eps_eff, h, f, delta).unwrap();
        let r = (x - target).abs();
        worst.set(worst.get().max(r));
        count.set(count.get() + 1);
        proptest::prop_assert!(r < 0.01, "residual {r} ohm");
        Ok(())
    });
    let detail = format!(
        "{} tuples, max residual {:.2e} ohm (tol 0.01)",
        count.get(),
        worst.get()
    );
    match result {
        Ok(()) => Ok((count.get() >= 1000, detail)),
        Err(e) => Ok((false, format!("{detail}; {e}"))),
    }
}

fn cylinder_oracle() -> Verdict {
    let coarse = cylinder_error(CYLINDER_RADIUS / 10.0).map_err(|e| e.to_string())?;
    let fine = cylinder_error(CYLINDER_RADIUS / 20.0).map_err(|e| e.to_string())?;
    Ok((
        coarse < 0.05 && fine < coarse,
        format!("RMS error {coarse:.4} at r/10 (tol 0.05), {fine:.4} at r/20"),
    ))
}

fn spreading_and_boundary() -> Verdict {
    let step = ORACLE_GRID_STEP;
    let ratio = spreading_ratio(step).map_err(|e| e.to_string())?;
    let deviation = (ratio / 2f64.sqrt() - 1.0).abs();
    let reflection = boundary_reflection(step).map_err(|e| e.to_string())?;
    Ok((
        deviation < 0.03 && reflection < 0.01,
        format!(
            "ratio {ratio:.4} ({:.2}% from sqrt 2, tol 3%), boundary reflection {:.3}% (tol 1%)",
            deviation * 100.0,
            reflection * 100.0
        ),
    ))
}

fn fluctuation_trend() -> Verdict {
    let out = scratch("compare");
    porosurf(&["compare"], &out)?;
    let rows = csv_rows(&out.join("compare.csv"))?;
    let sigma: Vec<f64> = rows.iter().map(|r| field(r, 2)).collect::<Result<_, _>>()?;
    if sigma.len() != 6 {
        return Err(format!("expected 6 models, got {}", sigma.len()));
    }
    let decreasing = sigma[1..].windows(2).all(|w| w[1] < w[0]);
    let list: Vec<String> = sigma.iter().map(|s| format!("{s:.4}")).collect();
    Ok((
        decreasing && sigma[0] < sigma[5],
        format!("sigma dB for models 0-5: {}", list.join(", ")),
    ))
}

fn path_loss_pipeline() -> Verdict {
    let lambda = 9.4e-3;
    let dx = 0.1e-3;
    let x: Vec<f64> = (0..3000).map(|i| i as f64 * dx).collect();
    // sinusoidal ripple with an SD of 0.3 dB at the standing-wave period
    let amp = 0.3 * 2f64.sqrt();
    let p: Vec<f64> = x
        .iter()
        .map(|&x| -1.1 * x + amp * (4.0 * std::f64::consts::PI * x / lambda + 0.7).sin())
        .collect();
    let profile = CenterlineProfile::from_db(x, p, 1.0)
        .and_then(|p| p.with_local_mean(2.0 * lambda))
        .map_err(|e| e.to_string())?;
    let synthetic = path_loss_fit(&profile, lambda).map_err(|e| e.to_string())?;

    let out = scratch("path_loss");
    let cfg = write_config(
        &out,
        "[simulation.attenuation]\ndb_per_m = 1.1\nguide_width = 0.009\n",
    )?;
    porosurf(&["simulate", "-m", "0", "-c", &cfg], &out)?;
    let rows = csv_rows(&out.join("model0_report.csv"))?;
    let simulated = field(rows.first().ok_or("empty report")?, 3)?;
    Ok((
        (synthetic - 1.1).abs() <= 0.02 && (simulated - 1.1).abs() <= 0.1,
        format!("synthetic {synthetic:.4} dB/m (tol 0.02), simulated channel {simulated:.4} dB/m (tol 0.1)"),
    ))
}

fn band_pipeline() -> Verdict {
    let step = 0.25e9;
    let f: Vec<f64> = (0..61).map(|k| 17e9 + step * k as f64).collect();
    let (peak, half) = (24.5e9, 4.95e9);
    let db: Vec<f64> = f
        .iter()
        .map(|&f| -3.0 * ((f - peak) / half).powi(2))
        .collect();
    let m = band_metrics(&Spectrum { frequencies: f, db }).map_err(|e| e.to_string())?;
    let (lo, hi) = m.band_3db;
    let synthetic_ok = (lo - (peak - half)).abs() <= step && (hi - (peak + half)).abs() <= step;

    let out = scratch("sweep");
    porosurf(&["sweep", "-m", "5"], &out)?;
    let rows = csv_rows(&out.join("model5_band.csv"))?;
    let sweep_detail = match rows.first() {
        Some(r) if r.len() >= 4 && !r[0].is_empty() => {
            let (f_peak, b_lo, b_hi) = (field(r, 0)?, field(r, 2)?, field(r, 3)?);
            Some(format!(
                "model 5 peak {:.2} GHz, band {:.2}-{:.2} GHz",
                f_peak / 1e9,
                b_lo / 1e9,
                b_hi / 1e9
            ))
        }
        _ => None,
    };
    let synthetic = format!(
        "synthetic band {:.3}-{:.3} GHz (expected {:.2}-{:.2} within {:.2})",
        lo / 1e9,
        hi / 1e9,
        (peak - half) / 1e9,
        (peak + half) / 1e9,
        step / 1e9
    );
    Ok(match sweep_detail {
        Some(s) => (synthetic_ok, format!("{synthetic}; {s}")),
        None => (
            false,
            format!("{synthetic}; model 5 sweep has no interior transmission peak"),
        ),
    })
}

fn determinism() -> Verdict {
    let base = scratch("determinism");
    let cfg = write_config(
        &base,
        "[lattice.defaults]\nd = 0.08\nlead = 0.01\n\n[simulation]\npml_x_cells = 60\n\n\
         [analysis]\nmargins = 0.01\n\n[sweep]\nn_points = 12\n",
    )?;
    let mut digests = Vec::new();
    for threads in ["1", "2", "3"] {
        let out = base.join(format!("threads{threads}"));
        porosurf(&["design-table", "-c", &cfg, "--threads", threads], &out)?;
        porosurf(
            &["simulate", "-m", "5", "-c", &cfg, "--threads", threads],
            &out,
        )?;
        porosurf(
            &["sweep", "-m", "4", "-c", &cfg, "--threads", threads],
            &out,
        )?;
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&out)
            .map_err(|e| e.to_string())?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
            .map(|e| {
                (
                    e.file_name().to_string_lossy().into_owned(),
                    fs::read(e.path()).unwrap(),
                )
            })
            .collect();
        files.sort();
        digests.push(files);
    }
    let n = digests[0].len();
    let same = digests.windows(2).all(|w| w[0] == w[1]);
    Ok((
        same && n >= 6,
        format!("{n} CSV files compared across 1, 2 and 3 threads"),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("design table regression", design_table_regression),
        ("porosity regression", porosity_regression),
        ("thickness round trip", thickness_round_trip),
        ("solver vs cylinder oracle", cylinder_oracle),
        ("free-space spreading and boundary", spreading_and_boundary),
        ("fluctuation trend", fluctuation_trend),
        ("path-loss pipeline", path_loss_pipeline),
        ("band-metrics pipeline", band_pipeline),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    let mut ran = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let (passed, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        let tag = if passed { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] {name}: {detail} [{:.1} s]",
            start.elapsed().as_secs_f64()
        );
        let _ = std::io::stdout().flush();
        failed += usize::from(!passed);
    }
    let _ = fs::remove_dir_all(
        std::env::temp_dir().join(format!("porosurf-acceptance-{}", std::process::id())),
    );
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
