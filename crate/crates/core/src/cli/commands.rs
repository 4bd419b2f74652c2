//! Subcommand implementations.

use std::fmt::Write as _;

use crate::analysis::{
    band_metrics, extract_centerline, AnalysisReport, CenterlineProfile, Spectrum,
};
use crate::design::{design_row, design_table_csv};
use crate::geometry::CavityLattice;
use crate::sim::export::{amplitude_map_csv, amplitude_map_pgm, num, probe_series_csv};
use crate::sim::{self, Waveform};
use crate::svg::{Chart, Series};

use super::{
    CliError, Command, Config, GlobalArgs, Output, ResolvedModel, RunManifest, EXIT_NUMERICAL,
};

fn write_manifest(
    global: &GlobalArgs,
    command: &Command,
    config: &Config,
    models: &[ResolvedModel],
    out: &mut Output,
) -> Result<(), CliError> {
    let manifest = RunManifest::new(global, command, config, models.to_vec());
    out.write("manifest.toml", manifest.to_toml())?;
    Ok(())
}

fn prefix(model: &ResolvedModel) -> String {
    format!("model{}", model.model_id)
}

fn write_geometry(model: &ResolvedModel, out: &mut Output) -> Result<CavityLattice, CliError> {
    let lattice = model.build_lattice()?;
    out.write(
        &format!("{}_geometry.txt", prefix(model)),
        lattice.to_geometry_text(),
    )?;
    Ok(lattice)
}

pub fn design_table(
    global: &GlobalArgs,
    command: &Command,
    config: &Config,
    out: &mut Output,
) -> Result<(), CliError> {
    let resolved: Vec<ResolvedModel> = (0..=5).filter_map(|m| config.resolve(m).ok()).collect();
    write_manifest(global, command, config, &resolved, out)?;
    if global.dry_run {
        out.log("dry run: manifest written");
        return Ok(());
    }
    let rows = (0..=5)
        .map(|m| Ok(design_row(&config.surface, &config.lattice_params(m)?)?))
        .collect::<Result<Vec<_>, CliError>>()?;
    let csv = design_table_csv(&rows);
    let path = out.write("design_table.csv", &csv)?;
    out.say(&csv);
    let infeasible: Vec<String> = rows
        .iter()
        .filter_map(|r| {
            r.note
                .as_ref()
                .map(|n| format!("model {}: {n}", r.model_id))
        })
        .collect();
    for line in &infeasible {
        eprintln!("error: {line}");
    }
    out.log(format!("wrote {}", path.display()));
    if infeasible.is_empty() {
        Ok(())
    } else {
        Err(CliError::Partial {
            message: format!("{} of 6 designs are infeasible", infeasible.len()),
            completed: path.display().to_string(),
            code: EXIT_NUMERICAL,
        })
    }
}

/// Run one CW channel simulation and write its field and analysis files.
fn run_channel(
    model: &ResolvedModel,
    lattice: &CavityLattice,
    config: &Config,
    out: &mut Output,
) -> Result<AnalysisReport, CliError> {
    let mut sim_config = model.simulation.clone();
    sim_config.record_map = true;
    if !matches!(sim_config.source.waveform, Waveform::ContinuousWave { .. }) {
        return Err(CliError::Config(
            "simulation.source.waveform: channel runs need a continuous wave".into(),
        ));
    }
    let p = prefix(model);
    out.log(format!(
        "{p}: porosity {:.2} %, background index {:.4}",
        model.porosity * 100.0,
        sim_config.background_index
    ));
    let record = sim::run(&sim_config, lattice)?;
    out.log(format!(
        "{p}: {} steps, {:.1} s",
        record.metadata.steps, record.metadata.wall_clock_s
    ));
    if let Some(csv) = amplitude_map_csv(&record) {
        out.write(&format!("{p}_amplitude.csv"), csv)?;
    }
    if let Some(pgm) = amplitude_map_pgm(&record, config.analysis.image_range_db) {
        out.write(&format!("{p}_amplitude.pgm"), pgm)?;
    }
    if !record.probe_series.is_empty() {
        out.write(&format!("{p}_probes.csv"), probe_series_csv(&record))?;
    }
    let lambda = sim_config.background_wavelength();
    let a = &config.analysis;
    let profile = extract_centerline(
        &record,
        &model.lattice.channel_interior(),
        a.margins,
        a.reference,
    )?
    .with_local_mean(a.window_wavelengths * lambda)?;
    out.write(&format!("{p}_profile.csv"), profile.to_csv())?;
    out.write(&format!("{p}_profile.svg"), profile_chart(&p, &profile))?;
    let mut report =
        AnalysisReport::from_profile(model.model_id.to_string(), model.porosity, &profile, lambda)?;
    report
        .warnings
        .splice(0..0, record.metadata.warnings.iter().cloned());
    out.write(
        &format!("{p}_report.csv"),
        format!("{}{}", AnalysisReport::csv_header(), report.csv_row()),
    )?;
    out.write(&format!("{p}_report.txt"), report.to_text())?;
    Ok(report)
}

fn profile_chart(title: &str, profile: &CenterlineProfile) -> String {
    let x = profile.x.clone();
    Chart::new(&format!("{title} centerline field"), "x (mm)", "field (dB)")
        .x_scale(1e3)
        .with_series(Series::line("field", x.clone(), profile.p_db.clone()))
        .with_series(Series::line("local mean", x, profile.local_mean_db.clone()))
        .render()
}

pub fn simulate(
    global: &GlobalArgs,
    command: &Command,
    config: &Config,
    model_id: u8,
    out: &mut Output,
) -> Result<(), CliError> {
    let model = config.resolve(model_id)?;
    write_manifest(global, command, config, std::slice::from_ref(&model), out)?;
    let lattice = write_geometry(&model, out)?;
    if global.dry_run {
        out.log("dry run: manifest and geometry written");
        return Ok(());
    }
    let report = run_channel(&model, &lattice, config, out)?;
    out.say(report.to_text());
    Ok(())
}

fn compare_csv(reports: &[AnalysisReport]) -> String {
    let mut csv = String::from("model,porosity_pct,sigma_db,path_loss_db_per_m\n");
    let opt = |v: Option<f64>| v.map_or(String::new(), num);
    for r in reports {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            r.label,
            num(r.porosity * 100.0),
            opt(r.sigma),
            opt(r.path_loss)
        );
    }
    csv
}

pub fn compare(
    global: &GlobalArgs,
    command: &Command,
    config: &Config,
    models: &[u8],
    out: &mut Output,
) -> Result<(), CliError> {
    if models.len() < 2 {
        return Err(CliError::Usage("compare needs at least two models".into()));
    }
    let resolved = models
        .iter()
        .map(|&m| config.resolve(m))
        .collect::<Result<Vec<_>, _>>()?;
    write_manifest(global, command, config, &resolved, out)?;
    let lattices = resolved
        .iter()
        .map(|m| write_geometry(m, out))
        .collect::<Result<Vec<_>, _>>()?;
    if global.dry_run {
        out.log("dry run: manifest and geometry written");
        return Ok(());
    }
    let mut reports = Vec::new();
    for (model, lattice) in resolved.iter().zip(&lattices) {
        match run_channel(model, lattice, config, out) {
            Ok(r) => reports.push(r),
            Err(e) => {
                let code = e.exit_code();
                let done: Vec<&str> = reports.iter().map(|r| r.label.as_str()).collect();
                if !reports.is_empty() {
                    out.write("compare.csv", compare_csv(&reports))?;
                }
                return Err(CliError::Partial {
                    message: format!("model {}: {e}", model.model_id),
                    completed: if done.is_empty() {
                        "none".into()
                    } else {
                        format!("models {} (compare.csv)", done.join(", "))
                    },
                    code,
                });
            }
        }
    }
    let csv = compare_csv(&reports);
    out.write("compare.csv", &csv)?;
    let rho: Vec<f64> = reports.iter().map(|r| r.porosity * 100.0).collect();
    let sigma: Vec<f64> = reports
        .iter()
        .map(|r| r.sigma.unwrap_or(f64::NAN))
        .collect();
    let chart = Chart::new(
        "Fluctuation against porosity",
        "porosity (%)",
        "fluctuation SD (dB)",
    )
    .with_series(Series::line("sigma", rho, sigma).with_markers());
    out.write("compare.svg", chart.render())?;
    out.say(csv);
    Ok(())
}

pub fn sweep(
    global: &GlobalArgs,
    command: &Command,
    config: &Config,
    model_id: u8,
    band: (f64, f64),
    n_points: usize,
    out: &mut Output,
) -> Result<(), CliError> {
    if n_points < 2 {
        return Err(CliError::Usage(format!(
            "sweep needs at least 2 points, got {n_points}"
        )));
    }
    if !(band.0 > 0.0 && band.1 > band.0) {
        return Err(CliError::Usage(format!(
            "need 0 < f_lo < f_hi, got [{}, {}]",
            band.0, band.1
        )));
    }
    let model = config.resolve_sweep(model_id)?;
    write_manifest(global, command, config, std::slice::from_ref(&model), out)?;
    let lattice = write_geometry(&model, out)?;
    if global.dry_run {
        out.log("dry run: manifest and geometry written");
        return Ok(());
    }
    let p = prefix(&model);
    out.log(format!(
        "{p}: sweep {:.2}-{:.2} GHz, {n_points} points",
        band.0 / 1e9,
        band.1 / 1e9
    ));
    let result = sim::sweep(&model.simulation, &lattice, band, n_points)?;
    let s21 = Spectrum {
        frequencies: result.frequencies.clone(),
        db: result.s21_db(),
    };
    let s11 = Spectrum {
        frequencies: result.frequencies.clone(),
        db: result.s11_db(),
    };
    let mut csv = String::from("freq_hz,s21_db,s11_db\n");
    for ((f, a), b) in s21.frequencies.iter().zip(&s21.db).zip(&s11.db) {
        let _ = writeln!(csv, "{},{},{}", num(*f), num(*a), num(*b));
    }
    out.write(&format!("{p}_sweep.csv"), csv)?;

    let metrics = band_metrics(&s21);
    let mut band_csv = String::from("f_peak_hz,peak_db,band_lo_hz,band_hi_hz,truncated\n");
    if let Ok(m) = &metrics {
        let _ = writeln!(
            band_csv,
            "{},{},{},{},{}",
            num(m.f_peak),
            num(m.peak_db),
            num(m.band_3db.0),
            num(m.band_3db.1),
            m.truncated
        );
    }
    out.write(&format!("{p}_band.csv"), band_csv)?;

    let chart = Chart::new(&format!("{p} transmission"), "frequency (GHz)", "dB")
        .x_scale(1e-9)
        .band(metrics.as_ref().ok().map(|m| m.band_3db))
        .with_series(Series::line(
            "S21 proxy",
            s21.frequencies.clone(),
            s21.db.clone(),
        ))
        .with_series(Series::line(
            "S11 proxy",
            s11.frequencies.clone(),
            s11.db.clone(),
        ));
    out.write(&format!("{p}_sweep.svg"), chart.render())?;

    let report = AnalysisReport {
        label: model.model_id.to_string(),
        porosity: model.porosity,
        warnings: result.warnings.clone(),
        ..AnalysisReport::default()
    }
    .with_spectra(s21, s11);
    out.write(
        &format!("{p}_report.csv"),
        format!("{}{}", AnalysisReport::csv_header(), report.csv_row()),
    )?;
    out.write(&format!("{p}_report.txt"), report.to_text())?;
    out.say(report.to_text());
    Ok(())
}
