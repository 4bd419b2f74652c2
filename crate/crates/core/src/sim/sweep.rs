//! Broadband transmission from a pulse pair: the lattice run against a
//! reference run with the same walls and no cavities.

use num_complex::Complex64;

use crate::geometry::CavityLattice;
use crate::material::C0;

use super::{config_error, run, FieldRecord, Result, SimError, SimulationConfig, Waveform};

const MIN_CELLS_PER_WAVELENGTH: f64 = 15.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub frequencies: Vec<f64>,
    /// Output-probe spectrum of the lattice run over the reference run.
    pub s21: Vec<Complex64>,
    /// Change of the input-probe spectrum caused by the lattice, relative to
    /// the reference.
    pub s11: Vec<Complex64>,
    pub lattice: FieldRecord,
    pub reference: FieldRecord,
    pub warnings: Vec<String>,
}

impl SweepResult {
    pub fn s21_db(&self) -> Vec<f64> {
        self.s21.iter().map(|v| 20.0 * v.norm().log10()).collect()
    }

    pub fn s11_db(&self) -> Vec<f64> {
        self.s11.iter().map(|v| 20.0 * v.norm().log10()).collect()
    }
}

/// `n_points` evenly spaced frequencies from `band.0` to `band.1`.
pub fn linspace(band: (f64, f64), n_points: usize) -> Vec<f64> {
    (0..n_points)
        .map(|k| band.0 + (band.1 - band.0) * k as f64 / (n_points - 1) as f64)
        .collect()
}

/// Run the pulse pair. `config.probes[0]` is the input probe and
/// `config.probes[1]` the output probe; waveform, frequency and spectrum
/// settings are overridden.
pub fn sweep(
    config: &SimulationConfig,
    lattice: &CavityLattice,
    band: (f64, f64),
    n_points: usize,
) -> Result<SweepResult> {
    if n_points < 2 {
        return Err(config_error(
            "n_points",
            format!("need at least 2, got {n_points}"),
        ));
    }
    let (f_lo, f_hi) = band;
    if !(f_lo > 0.0 && f_hi > f_lo && f_hi.is_finite()) {
        return Err(config_error(
            "band",
            format!("need 0 < f_lo < f_hi, got [{f_lo}, {f_hi}]"),
        ));
    }
    if config.probes.len() < 2 {
        return Err(config_error("probes", "need an input and an output probe"));
    }
    let n_max = config.background_index.max(config.cavity_index);
    let lambda = C0 / (f_hi * n_max);
    if config.grid_step > lambda / MIN_CELLS_PER_WAVELENGTH {
        return Err(SimError::Resolution(format!(
            "grid_step {:.3e} m gives {:.1} cells per wavelength at {:.3e} Hz; {MIN_CELLS_PER_WAVELENGTH} required",
            config.grid_step,
            lambda / config.grid_step,
            f_hi
        )));
    }

    let frequencies = linspace(band, n_points);
    let mut pulse = config.clone();
    pulse.source.frequency = 0.5 * (f_lo + f_hi);
    pulse.source.waveform = Waveform::GaussianPulse { f_lo, f_hi };
    pulse.spectrum_frequencies = frequencies.clone();
    pulse.record_map = false;

    let lattice_run = run(&pulse, lattice)?;
    let reference_run = run(&pulse, &lattice.without_cavities())?;

    let input = &config.probes[0].name;
    let output = &config.probes[1].name;
    let spectrum = |record: &FieldRecord, name: &str| -> Vec<Complex64> {
        record
            .spectrum(name)
            .map(|s| s.values.clone())
            .unwrap_or_default()
    };
    let (in_lat, out_lat) = (
        spectrum(&lattice_run, input),
        spectrum(&lattice_run, output),
    );
    let (in_ref, out_ref) = (
        spectrum(&reference_run, input),
        spectrum(&reference_run, output),
    );
    let s21 = out_lat.iter().zip(&out_ref).map(|(a, b)| a / b).collect();
    let s11 = in_lat
        .iter()
        .zip(&in_ref)
        .map(|(a, b)| (a - b) / b)
        .collect();

    let mut warnings: Vec<String> = lattice_run
        .metadata
        .warnings
        .iter()
        .map(|w| format!("lattice run: {w}"))
        .collect();
    warnings.extend(
        reference_run
            .metadata
            .warnings
            .iter()
            .map(|w| format!("reference run: {w}")),
    );

    Ok(SweepResult {
        frequencies,
        s21,
        s11,
        lattice: lattice_run,
        reference: reference_run,
        warnings,
    })
}
