//! 2D effective-index FDTD model of the surface-wave channel.
//!
//! The guided surface wave is reduced to a scalar TMz problem (`Ez`, `Hx`,
//! `Hy`) in the plane of the surface. The solid dielectric maps to a uniform
//! background index, cavities to index-1 disks, fluid-metal walls and bars
//! to perfect conductors. All four sides are terminated by a convolutional
//! PML.

mod driver;
pub mod export;
pub mod grid;
mod kernel;
pub mod scatter;
pub mod sweep;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, Rect};
use crate::material::C0;

pub use driver::{run, transit_time};
pub use grid::{rasterize, Cell, GridInfo, MaterialGrid};
pub use kernel::Solver;
pub use scatter::{analytic_cylinder_scatter, CylinderScatter};
pub use sweep::{sweep, SweepResult};

/// Samples per period used by the steady-state DFT; CW time steps are
/// chosen so that one period is a whole multiple of this.
pub const DFT_SAMPLES_PER_PERIOD: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {field}: {message}")]
    Config {
        field: &'static str,
        message: String,
    },
    #[error("resolution: {0}")]
    Resolution(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("solver diverged at step {step}: |Ez| reached {magnitude:e}")]
    Unstable { step: usize, magnitude: f64 },
    #[error("no steady state after {steps} steps (last relative change {change:.3e})")]
    NotConverged { steps: usize, change: f64 },
    #[error("series did not converge by order {order}")]
    SeriesConvergence { order: usize },
}

pub type Result<T> = std::result::Result<T, SimError>;

pub(crate) fn config_error(field: &'static str, message: impl Into<String>) -> SimError {
    SimError::Config {
        field,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Waveform {
    /// Sine at the source frequency behind a raised-cosine turn-on.
    ContinuousWave { ramp_periods: f64 },
    /// Gaussian-modulated sine whose spectrum is `1/e` down at the band edges.
    GaussianPulse { f_lo: f64, f_hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    HalfCosine,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceShape {
    /// Soft line source across `width`, standing in for a waveguide aperture.
    Aperture {
        x: f64,
        y_center: f64,
        width: f64,
        profile: Profile,
    },
    /// Soft source on a single node (an infinite line current in 3D).
    Point { x: f64, y: f64 },
    /// Plane wave travelling along `+x`, injected with a scattered-field
    /// formulation: the solver evolves only the scattered field and the
    /// recorded maps add the analytic incident field back.
    PlaneWave,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    pub frequency: f64,
    pub amplitude: f64,
    pub waveform: Waveform,
    pub shape: SourceShape,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            frequency: 26e9,
            amplitude: 1.0,
            waveform: Waveform::ContinuousWave { ramp_periods: 8.0 },
            shape: SourceShape::Aperture {
                x: 0.0,
                y_center: 0.0,
                width: 9.6e-3,
                profile: Profile::HalfCosine,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Probe {
    pub name: String,
    pub x: f64,
    pub y: f64,
}

impl Probe {
    pub fn new(name: impl Into<String>, x: f64, y: f64) -> Self {
        Self {
            name: name.into(),
            x,
            y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extraction {
    /// Single-bin DFT at the source frequency over whole periods.
    Dft,
    /// Running peak of `|Ez|` over the last window.
    Peak,
}

/// Uniform loss, specified by the attenuation it gives the fundamental mode
/// of a parallel-plate channel of width `guide_width` (or a plane wave in the
/// background when no width is given).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Attenuation {
    pub db_per_m: f64,
    pub guide_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Cell size (m).
    pub grid_step: f64,
    /// Fraction of the 2D Courant limit.
    pub courant: f64,
    /// Simulated region; the lattice bounding box when absent.
    pub domain: Option<Rect>,
    pub background_index: f64,
    pub cavity_index: f64,
    /// Absorber depth in cells on the `y` sides, and on the `x` ends unless
    /// `pml_x_cells` is set.
    pub pml_cells: usize,
    /// Absorber depth on the `x` ends. Periodic lattices continued into the
    /// absorber need a deeper, more gradual layer than a uniform medium.
    pub pml_x_cells: Option<usize>,
    pub source: SourceConfig,
    pub probes: Vec<Probe>,
    /// Record the steady-state amplitude map (CW runs).
    pub record_map: bool,
    pub extraction: Extraction,
    pub max_steps: usize,
    /// Settling time before the first DFT window, in domain transit times.
    pub settle_transits: f64,
    /// Pulse runs stop this many domain transit times after the pulse has
    /// been emitted, unless the field has already decayed.
    pub pulse_transits: f64,
    /// Length of one convergence window, in source periods.
    pub window_periods: usize,
    /// Relative change between consecutive windows that counts as steady.
    pub convergence_tol: f64,
    pub attenuation: Option<Attenuation>,
    /// Frequencies for the per-probe running DFT.
    pub spectrum_frequencies: Vec<f64>,
    /// Steps between divergence checks.
    pub check_interval: usize,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            grid_step: 1e-4,
            courant: 0.99,
            domain: None,
            background_index: 1.2303,
            cavity_index: 1.0,
            pml_cells: 20,
            pml_x_cells: None,
            source: SourceConfig::default(),
            probes: Vec::new(),
            record_map: true,
            extraction: Extraction::Dft,
            max_steps: 200_000,
            settle_transits: 3.0,
            pulse_transits: 6.0,
            window_periods: 4,
            convergence_tol: 1e-3,
            attenuation: None,
            spectrum_frequencies: Vec::new(),
            check_interval: 100,
            threads: None,
        }
    }
}

impl SimulationConfig {
    /// Absorber depth on the `x` ends.
    pub fn pml_x(&self) -> usize {
        self.pml_x_cells.unwrap_or(self.pml_cells)
    }

    /// Background wavelength at the source frequency.
    pub fn background_wavelength(&self) -> f64 {
        C0 / (self.source.frequency * self.background_index)
    }

    /// Time step: `courant` times the 2D limit of the fastest medium
    /// (`min_index`), shortened for CW runs so a period is a whole number of
    /// DFT sample blocks.
    pub fn time_step(&self, min_index: f64) -> f64 {
        let limit = self.grid_step * min_index / (C0 * std::f64::consts::SQRT_2);
        let dt_max = self.courant * limit;
        match self.source.waveform {
            Waveform::ContinuousWave { .. } => {
                let period = 1.0 / self.source.frequency;
                let block = DFT_SAMPLES_PER_PERIOD as f64;
                let steps = ((period / dt_max) / block).ceil() * block;
                period / steps
            }
            Waveform::GaussianPulse { .. } => dt_max,
        }
    }

    /// Checks that do not depend on the geometry.
    pub fn validate(&self) -> Result<()> {
        let finite_positive = |field: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config_error(field, format!("must be positive, got {v}")))
            }
        };
        finite_positive("grid_step", self.grid_step)?;
        finite_positive("source.frequency", self.source.frequency)?;
        if !(self.courant > 0.0 && self.courant <= 0.99) {
            return Err(config_error(
                "courant",
                format!("must be in (0, 0.99], got {}", self.courant),
            ));
        }
        if !(self.background_index >= 1.0) {
            return Err(config_error("background_index", "must be >= 1"));
        }
        if !(self.cavity_index >= 1.0) {
            return Err(config_error("cavity_index", "must be >= 1"));
        }
        if !(self.source.amplitude >= 0.0 && self.source.amplitude.is_finite()) {
            return Err(config_error("source.amplitude", "must be finite and >= 0"));
        }
        if self.pml_cells < 4 {
            return Err(config_error("pml_cells", "at least 4 cells required"));
        }
        if self.pml_x_cells.is_some_and(|n| n < 4) {
            return Err(config_error("pml_x_cells", "at least 4 cells required"));
        }
        if !(self.settle_transits >= 0.0 && self.pulse_transits > 0.0) {
            return Err(config_error(
                "settle_transits",
                "settle_transits must be >= 0 and pulse_transits > 0",
            ));
        }
        if self.window_periods == 0 {
            return Err(config_error("window_periods", "must be >= 1"));
        }
        if self.check_interval == 0 {
            return Err(config_error("check_interval", "must be >= 1"));
        }
        if self.max_steps == 0 {
            return Err(config_error("max_steps", "must be >= 1"));
        }
        if self.threads == Some(0) {
            return Err(config_error("threads", "must be >= 1"));
        }
        match self.source.waveform {
            Waveform::ContinuousWave { ramp_periods } => {
                if !(ramp_periods >= 0.0) {
                    return Err(config_error("source.waveform.ramp_periods", "must be >= 0"));
                }
            }
            Waveform::GaussianPulse { f_lo, f_hi } => {
                if !(f_lo > 0.0 && f_hi > f_lo) {
                    return Err(config_error(
                        "source.waveform",
                        format!("need 0 < f_lo < f_hi, got [{f_lo}, {f_hi}]"),
                    ));
                }
            }
        }
        if let Some(att) = self.attenuation {
            if !(att.db_per_m >= 0.0) {
                return Err(config_error("attenuation.db_per_m", "must be >= 0"));
            }
            if matches!(self.source.shape, SourceShape::PlaneWave) {
                return Err(config_error(
                    "attenuation",
                    "not supported with the plane-wave source",
                ));
            }
        }
        let lambda = self.background_wavelength();
        if self.grid_step > lambda / 20.0 * (1.0 + 1e-9) {
            return Err(SimError::Resolution(format!(
                "grid_step {:.3e} m exceeds lambda/20 = {:.3e} m",
                self.grid_step,
                lambda / 20.0
            )));
        }
        Ok(())
    }
}

/// Time series of `Ez` at one probe node.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSeries {
    pub probe: Probe,
    pub values: Vec<f64>,
}

/// Running-DFT spectrum `sum Ez(t) exp(-i 2 pi f t) dt` at one probe node.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSpectrum {
    pub probe: Probe,
    pub frequencies: Vec<f64>,
    pub values: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub config: SimulationConfig,
    pub time_step: f64,
    pub steps: usize,
    pub converged: bool,
    pub last_change: f64,
    pub wall_clock_s: f64,
    pub warnings: Vec<String>,
}

/// Output of one simulation. Maps are row-major with `y` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRecord {
    pub grid: GridInfo,
    pub amplitude_map: Option<Vec<f64>>,
    /// Steady-state phasor `E` with `Ez(t) = Re{E exp(i w t)}` (DFT mode).
    pub phasor_map: Option<Vec<Complex64>>,
    pub probe_series: Vec<ProbeSeries>,
    pub probe_spectra: Vec<ProbeSpectrum>,
    pub metadata: RunMetadata,
}

impl FieldRecord {
    /// Bilinear interpolation of the amplitude map.
    pub fn amplitude_at(&self, x: f64, y: f64) -> Option<f64> {
        let map = self.amplitude_map.as_ref()?;
        Some(bilinear(&self.grid, map, x, y))
    }

    /// Bilinear interpolation of the phasor map.
    pub fn phasor_at(&self, x: f64, y: f64) -> Option<Complex64> {
        let map = self.phasor_map.as_ref()?;
        Some(bilinear(&self.grid, map, x, y))
    }

    pub fn spectrum(&self, name: &str) -> Option<&ProbeSpectrum> {
        self.probe_spectra.iter().find(|s| s.probe.name == name)
    }

    pub fn series(&self, name: &str) -> Option<&ProbeSeries> {
        self.probe_series.iter().find(|s| s.probe.name == name)
    }
}

pub(crate) fn bilinear<T>(grid: &GridInfo, map: &[T], x: f64, y: f64) -> T
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let fx = ((x - grid.x0) / grid.dx).clamp(0.0, (grid.nx - 1) as f64);
    let fy = ((y - grid.y0) / grid.dx).clamp(0.0, (grid.ny - 1) as f64);
    let i = (fx.floor() as usize).min(grid.nx.saturating_sub(2));
    let j = (fy.floor() as usize).min(grid.ny.saturating_sub(2));
    let (tx, ty) = (fx - i as f64, fy - j as f64);
    let at = |i: usize, j: usize| map[j * grid.nx + i];
    at(i, j) * ((1.0 - tx) * (1.0 - ty))
        + at(i + 1, j) * (tx * (1.0 - ty))
        + at(i, j + 1) * ((1.0 - tx) * ty)
        + at(i + 1, j + 1) * (tx * ty)
}
