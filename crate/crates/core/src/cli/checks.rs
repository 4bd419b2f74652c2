//! The `validate` command: oracle checks with measured values and thresholds.

use std::fmt::Write as _;

use crate::design::{design_row, REFERENCE_EPS_EFF, REFERENCE_H_MM, REFERENCE_POROSITY_PCT};
use crate::geometry::LatticeParams;
use crate::material::SurfaceSpec;
use crate::oracle::{boundary_reflection, cylinder_error, spreading_ratio, CYLINDER_RADIUS};
use crate::sim::export::num;

use super::{CliError, Command, Config, GlobalArgs, Output};

/// Minimum cells per cavity radius for rasterization.
pub const MIN_CELLS_PER_RADIUS: f64 = 5.0;
pub const CYLINDER_TOLERANCE: f64 = 0.05;
pub const SPREADING_TOLERANCE: f64 = 0.03;
pub const REFLECTION_TOLERANCE: f64 = 0.01;
/// Grid step of the spreading and reflection runs.
pub const ORACLE_GRID_STEP: f64 = 0.2e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub threshold: f64,
    /// How `measured` is compared against `threshold`.
    pub relation: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn at_most(name: &'static str, measured: f64, threshold: f64, detail: String) -> Self {
        Self {
            name,
            measured,
            threshold,
            relation: "<=",
            passed: measured <= threshold,
            detail,
        }
    }

    fn at_least(name: &'static str, measured: f64, threshold: f64, detail: String) -> Self {
        Self {
            name,
            measured,
            threshold,
            relation: ">=",
            passed: measured >= threshold,
            detail,
        }
    }

    fn error(
        name: &'static str,
        threshold: f64,
        relation: &'static str,
        e: impl std::fmt::Display,
    ) -> Self {
        Self {
            name,
            measured: f64::NAN,
            threshold,
            relation,
            passed: false,
            detail: format!("run failed: {e}"),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] {}: measured {:.6} {} {:.6} ({})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.relation,
            self.threshold,
            self.detail
        )
    }
}

/// Largest deviations of the built-in reference design from the published
/// table: (eps_eff, h in mm, porosity in percentage points).
pub fn reference_table_deviation() -> (f64, f64, f64) {
    let surface = SurfaceSpec::default();
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for m in 0..=5u8 {
        let params = LatticeParams::model(m).expect("reference model");
        let row = design_row(&surface, &params).expect("reference model");
        let k = m as usize;
        let e = row
            .eps_eff
            .map_or(f64::INFINITY, |e| (e - REFERENCE_EPS_EFF[k]).abs());
        let h = row
            .h
            .map_or(f64::INFINITY, |h| (h * 1e3 - REFERENCE_H_MM[k]).abs());
        let p = (row.porosity * 100.0 - REFERENCE_POROSITY_PCT[k]).abs();
        worst = (worst.0.max(e), worst.1.max(h), worst.2.max(p));
    }
    worst
}

/// Fewest grid cells across any cavity radius among the configured models.
pub fn cells_per_radius(config: &Config) -> Result<f64, CliError> {
    let mut worst = f64::INFINITY;
    for m in 1..=5u8 {
        let params = config.lattice_params(m)?;
        worst = worst.min(params.r / config.simulation.grid_step);
    }
    Ok(worst)
}

pub fn run_checks(config: &Config, log: &dyn Fn(&str)) -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();
    let mut push = |c: Check| {
        log(&c.line());
        checks.push(c);
    };
    let (de, dh, dp) = reference_table_deviation();
    push(Check::at_most(
        "design table thickness",
        dh,
        0.02,
        format!("max |h - reference| in mm; max |eps_eff - reference| = {de:.4}"),
    ));
    push(Check::at_most(
        "design table permittivity",
        de,
        0.005,
        "max |eps_eff - reference| at two decimals".into(),
    ));
    push(Check::at_most(
        "porosity",
        dp,
        0.05,
        "max |porosity - reference| in percentage points".into(),
    ));
    let cpr = cells_per_radius(config)?;
    push(Check::at_least(
        "rasterization resolution",
        cpr,
        MIN_CELLS_PER_RADIUS,
        format!(
            "cavity radius / grid_step at grid_step {:e} m",
            config.simulation.grid_step
        ),
    ));

    let coarse = cylinder_error(CYLINDER_RADIUS / 10.0);
    let fine = cylinder_error(CYLINDER_RADIUS / 20.0);
    push(match &coarse {
        Ok(e) => Check::at_most(
            "cylinder oracle",
            *e,
            CYLINDER_TOLERANCE,
            "relative RMS amplitude error at grid_step r/10".into(),
        ),
        Err(e) => Check::error("cylinder oracle", CYLINDER_TOLERANCE, "<=", e),
    });
    push(match (&coarse, &fine) {
        (Ok(c), Ok(f)) => Check::at_most(
            "cylinder refinement",
            f / c,
            1.0,
            format!("error ratio r/20 over r/10 (r/20 error {f:.5})"),
        ),
        (Err(e), _) | (_, Err(e)) => Check::error("cylinder refinement", 1.0, "<=", e),
    });
    push(match spreading_ratio(ORACLE_GRID_STEP) {
        Ok(r) => Check::at_most(
            "cylindrical spreading",
            (r / 2f64.sqrt() - 1.0).abs(),
            SPREADING_TOLERANCE,
            format!("|ratio/sqrt(2) - 1|, amplitude ratio 50 mm / 100 mm = {r:.5}"),
        ),
        Err(e) => Check::error("cylindrical spreading", SPREADING_TOLERANCE, "<=", e),
    });
    push(match boundary_reflection(ORACLE_GRID_STEP) {
        Ok(r) => Check::at_most(
            "boundary reflection",
            r,
            REFLECTION_TOLERANCE,
            "pulse difference small vs large domain, relative to peak".into(),
        ),
        Err(e) => Check::error("boundary reflection", REFLECTION_TOLERANCE, "<=", e),
    });
    Ok(checks)
}

pub fn checks_csv(checks: &[Check]) -> String {
    let mut out = String::from("check,measured,relation,threshold,passed\n");
    for c in checks {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            c.name,
            num(c.measured),
            c.relation,
            num(c.threshold),
            c.passed
        );
    }
    out
}

pub fn validate(
    global: &GlobalArgs,
    command: &Command,
    config: &Config,
    out: &mut Output,
) -> Result<(), CliError> {
    let resolved: Vec<_> = (0..=5).filter_map(|m| config.resolve(m).ok()).collect();
    let manifest = super::RunManifest::new(global, command, config, resolved);
    out.write("manifest.toml", manifest.to_toml())?;
    if global.dry_run {
        out.log("dry run: manifest written");
        return Ok(());
    }
    let quiet = global.quiet;
    let checks = run_checks(config, &|line| {
        if !quiet {
            println!("{line}");
        }
    })?;
    let text: String = checks.iter().map(|c| c.line() + "\n").collect();
    out.write("validation.txt", text)?;
    out.write("validation.csv", checks_csv(&checks))?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::ChecksFailed {
            failed,
            total: checks.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_table_is_within_tolerance() {
        let (e, h, p) = reference_table_deviation();
        assert!(e <= 0.005 && h <= 0.02 && p <= 0.05, "{e} {h} {p}");
    }

    #[test]
    fn coarse_grid_fails_resolution() {
        let mut config = Config::default();
        config.simulation.grid_step = CYLINDER_RADIUS / 2.0;
        assert!(cells_per_radius(&config).unwrap() < MIN_CELLS_PER_RADIUS);
        assert!(cells_per_radius(&Config::default()).unwrap() >= MIN_CELLS_PER_RADIUS);
    }

    #[test]
    fn check_lines() {
        let c = Check::at_most("x", 0.5, 1.0, "d".into());
        assert!(c.passed && c.line().starts_with("[PASS] x"));
        let c = Check::error("y", 1.0, "<=", "boom");
        assert!(!c.passed && c.line().contains("boom"));
    }
}
