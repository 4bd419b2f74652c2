//! TOML run configuration and its resolution into per-model settings.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::{build_model, CavityLattice, LatticeParams, WallStyle};
use crate::material::{matched_thickness, solid_background_index, SurfaceSpec};
use crate::sim::{Probe, SimulationConfig};

use super::CliError;

/// Absorber depth at the channel ends in the default configuration.
pub const CHANNEL_PML_X_CELLS: usize = 400;

/// Optional replacements for [`LatticeParams`] fields.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeOverrides {
    pub w_l: Option<f64>,
    pub w_h: Option<f64>,
    pub r: Option<f64>,
    pub w_c: Option<f64>,
    pub d: Option<f64>,
    pub interleaved: Option<bool>,
    pub lead: Option<f64>,
    pub exterior_margin: Option<f64>,
    pub pad: Option<f64>,
    pub interior_rows: Option<usize>,
    pub walls: Option<WallStyle>,
    pub wall_thickness: Option<f64>,
    pub phase: Option<f64>,
}

impl LatticeOverrides {
    fn apply(&self, p: &mut LatticeParams) {
        macro_rules! set {
            ($($f:ident),*) => {$(
                if let Some(v) = self.$f {
                    p.$f = v;
                }
            )*};
        }
        set!(
            w_l,
            w_h,
            r,
            w_c,
            d,
            interleaved,
            lead,
            exterior_margin,
            pad,
            walls,
            wall_thickness
        );
        if self.interior_rows.is_some() {
            p.interior_rows = self.interior_rows;
        }
        if self.phase.is_some() {
            p.phase = self.phase;
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeSection {
    /// Applied to every model.
    pub defaults: LatticeOverrides,
    /// Per-model overrides keyed by model id ("0" to "5").
    pub model: BTreeMap<String, LatticeOverrides>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    /// Replace `simulation.background_index` with the index of the solid
    /// dielectric at each model's matched thickness.
    pub derive_background_index: bool,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            derive_background_index: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    /// Excluded length at both channel ends (m).
    pub margins: f64,
    /// Local-mean window in background wavelengths.
    pub window_wavelengths: f64,
    /// Amplitude that maps to 0 dB.
    pub reference: f64,
    /// Dynamic range of the PGM images (dB).
    pub image_range_db: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            margins: crate::analysis::DEFAULT_MARGIN,
            window_wavelengths: crate::analysis::DEFAULT_WINDOW_WAVELENGTHS,
            reference: 1.0,
            image_range_db: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub f_lo: f64,
    pub f_hi: f64,
    pub n_points: usize,
    /// Input probe distance past the entrance (m), on the centerline.
    pub input_offset: f64,
    /// Output probe distance before the channel end (m), on the centerline.
    pub output_offset: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            f_lo: 22e9,
            f_hi: 33e9,
            n_points: 45,
            input_offset: 20e-3,
            output_offset: 20e-3,
        }
    }
}

/// Complete file contents; every section and key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub surface: SurfaceSpec,
    pub lattice: LatticeSection,
    pub channel: ChannelSection,
    pub simulation: SimulationConfig,
    pub analysis: AnalysisSection,
    pub sweep: SweepSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            surface: SurfaceSpec::default(),
            lattice: LatticeSection::default(),
            channel: ChannelSection::default(),
            simulation: SimulationConfig {
                pml_x_cells: Some(CHANNEL_PML_X_CELLS),
                ..SimulationConfig::default()
            },
            analysis: AnalysisSection::default(),
            sweep: SweepSection::default(),
        }
    }
}

/// Settings for one model after all defaults and overrides are applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedModel {
    pub model_id: u8,
    pub porosity: f64,
    /// Surface at the model's porosity and matched thickness.
    pub surface: SurfaceSpec,
    pub lattice: LatticeParams,
    pub simulation: SimulationConfig,
}

impl ResolvedModel {
    pub fn build_lattice(&self) -> Result<CavityLattice, CliError> {
        Ok(build_model(&self.lattice)?)
    }
}

impl Config {
    /// Parse TOML text; errors carry line and column.
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Geometry-independent checks.
    pub fn validate(&self) -> Result<(), CliError> {
        self.surface.validate()?;
        self.simulation.validate()?;
        for key in self.lattice.model.keys() {
            match key.parse::<u8>() {
                Ok(id) if id <= 5 => {}
                _ => {
                    return Err(CliError::Config(format!(
                        "lattice.model.{key}: model ids are 0 to 5"
                    )))
                }
            }
        }
        let a = &self.analysis;
        if !(a.margins >= 0.0
            && a.window_wavelengths > 0.0
            && a.reference > 0.0
            && a.image_range_db > 0.0)
        {
            return Err(CliError::Config(
                "analysis: margins must be >= 0; window_wavelengths, reference and image_range_db > 0"
                    .into(),
            ));
        }
        Ok(())
    }

    pub fn lattice_params(&self, model_id: u8) -> Result<LatticeParams, CliError> {
        let mut params = LatticeParams::model(model_id)?;
        self.lattice.defaults.apply(&mut params);
        if let Some(o) = self.lattice.model.get(&model_id.to_string()) {
            o.apply(&mut params);
        }
        Ok(params)
    }

    pub fn resolve(&self, model_id: u8) -> Result<ResolvedModel, CliError> {
        let lattice = self.lattice_params(model_id)?;
        let porosity = lattice.porosity()?;
        let spec = self.surface.with_porosity(porosity);
        let h = matched_thickness(&spec)?;
        let mut simulation = self.simulation.clone();
        if self.channel.derive_background_index {
            simulation.background_index = solid_background_index(&spec, h)?;
        }
        Ok(ResolvedModel {
            model_id,
            porosity,
            surface: spec.with_thickness(h),
            lattice,
            simulation,
        })
    }

    /// Resolved model with centerline input/output probes for a sweep.
    pub fn resolve_sweep(&self, model_id: u8) -> Result<ResolvedModel, CliError> {
        let mut m = self.resolve(model_id)?;
        if m.simulation.probes.len() < 2 {
            let s = &self.sweep;
            m.simulation.probes = vec![
                Probe::new("input", s.input_offset, 0.0),
                Probe::new("output", m.lattice.d - s.output_offset, 0.0),
            ];
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(Config::from_toml("", "t").unwrap(), Config::default());
    }

    #[test]
    fn default_round_trips() {
        let c = Config::default();
        assert_eq!(Config::from_toml(&c.to_toml(), "t").unwrap(), c);
    }

    #[test]
    fn unknown_key_reports_position() {
        let err = Config::from_toml("[surface]\neps_r = 2.1\nepsr = 3\n", "cfg.toml").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("epsr"), "{msg}");
    }

    #[test]
    fn overrides_apply_in_order() {
        let c = Config::from_toml(
            "[lattice.defaults]\nd = 0.1\n[lattice.model.5]\ninterior_rows = 8\nd = 0.2\n",
            "t",
        )
        .unwrap();
        assert_eq!(c.lattice_params(4).unwrap().d, 0.1);
        let p5 = c.lattice_params(5).unwrap();
        assert_eq!((p5.d, p5.interior_rows), (0.2, Some(8)));
        assert_eq!(p5.lead, LatticeParams::model(5).unwrap().lead);
    }

    #[test]
    fn bad_model_key() {
        let c = Config::from_toml("[lattice.model.9]\nd = 0.1\n", "t").unwrap();
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
    }

    #[test]
    fn derived_background_grows_with_porosity() {
        let c = Config::default();
        let n: Vec<f64> = (0..=5)
            .map(|m| c.resolve(m).unwrap().simulation.background_index)
            .collect();
        assert!((n[0] - 1.2303).abs() < 1e-3);
        assert!(n.windows(2).all(|w| w[1] > w[0]));
    }
}
