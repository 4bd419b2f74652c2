//! Python bindings: material model, lattices, channel simulation, sweeps and
//! the analysis helpers.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use porosurf_core::analysis::{self, CenterlineProfile, Spectrum};
use porosurf_core::cli::{CliError, Config, ResolvedModel};
use porosurf_core::design;
use porosurf_core::geometry::{self, CavityLattice, LatticeParams, Rect};
use porosurf_core::material::{self, SurfaceSpec};
use porosurf_core::{oracle, sim};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn cli_error(e: CliError) -> PyErr {
    match e.exit_code() {
        porosurf_core::cli::EXIT_CONFIG | porosurf_core::cli::EXIT_USAGE => value_error(e),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn sim_error(e: sim::SimError) -> PyErr {
    cli_error(CliError::Sim(e))
}

fn load_config(config: Option<&str>) -> PyResult<Config> {
    let c = match config {
        Some(text) => Config::from_toml(text, "config").map_err(cli_error)?,
        None => Config::default(),
    };
    c.validate().map_err(cli_error)?;
    Ok(c)
}

#[pyfunction]
fn effective_permittivity(eps_r: f64, rho: f64) -> PyResult<f64> {
    material::effective_permittivity(eps_r, rho).map_err(value_error)
}

#[pyfunction]
fn skin_depth(sigma: f64, f: f64) -> PyResult<f64> {
    material::skin_depth(sigma, f).map_err(value_error)
}

#[pyfunction]
fn surface_reactance(eps_eff: f64, h: f64, f: f64, delta: f64) -> PyResult<f64> {
    material::surface_reactance(eps_eff, h, f, delta).map_err(value_error)
}

#[pyfunction]
fn solve_thickness(eps_eff: f64, f: f64, delta: f64, x_target: f64) -> PyResult<f64> {
    material::solve_thickness(eps_eff, f, delta, x_target).map_err(value_error)
}

#[pyfunction]
fn effective_index(x_s: f64) -> PyResult<f64> {
    material::effective_index(x_s).map_err(value_error)
}

#[pyfunction]
fn porosity_of(w_l: f64, w_h: f64, r: f64, interleaved: bool) -> PyResult<f64> {
    geometry::porosity_of(w_l, w_h, r, interleaved).map_err(value_error)
}

/// Material description of one surface design; defaults are the reference
/// design at 26 GHz.
#[pyclass(name = "SurfaceSpec", from_py_object)]
#[derive(Clone)]
struct PySurfaceSpec {
    inner: SurfaceSpec,
}

#[pymethods]
impl PySurfaceSpec {
    #[new]
    #[pyo3(signature = (eps_r=2.1, rho=0.0, h=2.85e-3, sigma_ground=material::COPPER_CONDUCTIVITY,
                        sigma_fill=material::GALINSTAN_CONDUCTIVITY, f=26e9, x_target=270.0))]
    fn new(
        eps_r: f64,
        rho: f64,
        h: f64,
        sigma_ground: f64,
        sigma_fill: f64,
        f: f64,
        x_target: f64,
    ) -> PyResult<Self> {
        let inner = SurfaceSpec {
            eps_r,
            rho,
            h,
            sigma_ground,
            sigma_fill,
            f,
            x_target,
        };
        inner.validate().map_err(value_error)?;
        Ok(Self { inner })
    }

    #[getter]
    fn eps_r(&self) -> f64 {
        self.inner.eps_r
    }
    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho
    }
    #[getter]
    fn h(&self) -> f64 {
        self.inner.h
    }
    #[getter]
    fn f(&self) -> f64 {
        self.inner.f
    }
    #[getter]
    fn x_target(&self) -> f64 {
        self.inner.x_target
    }

    /// Thickness that realizes the target reactance at this porosity.
    fn matched_thickness(&self) -> PyResult<f64> {
        material::matched_thickness(&self.inner).map_err(value_error)
    }

    /// `eps_eff`, `delta`, `x_s` and `n_eff` at this spec's thickness.
    fn derive<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = material::derive_surface(&self.inner).map_err(value_error)?;
        let out = PyDict::new(py);
        out.set_item("eps_eff", d.eps_eff)?;
        out.set_item("delta", d.delta)?;
        out.set_item("x_s", d.x_s)?;
        out.set_item("n_eff", d.n_eff)?;
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// One of the six reference lattices, optionally modified.
#[pyclass(name = "Lattice")]
struct PyLattice {
    params: LatticeParams,
    lattice: CavityLattice,
}

#[pymethods]
impl PyLattice {
    #[new]
    #[pyo3(signature = (model_id, d=None, w_c=None, interior_rows=None, lead=None))]
    fn new(
        model_id: u8,
        d: Option<f64>,
        w_c: Option<f64>,
        interior_rows: Option<usize>,
        lead: Option<f64>,
    ) -> PyResult<Self> {
        let mut params = LatticeParams::model(model_id).map_err(value_error)?;
        if let Some(d) = d {
            params.d = d;
        }
        if let Some(w) = w_c {
            params.w_c = w;
        }
        if interior_rows.is_some() {
            params.interior_rows = interior_rows;
        }
        if let Some(l) = lead {
            params.lead = l;
        }
        let lattice = geometry::build_model(&params).map_err(value_error)?;
        Ok(Self { params, lattice })
    }

    #[getter]
    fn model_id(&self) -> u8 {
        self.params.model_id
    }

    /// Nominal porosity of the pattern.
    fn porosity(&self) -> PyResult<f64> {
        self.params.porosity().map_err(value_error)
    }

    /// Cavity area fraction of the rectangle `(x0, y0, x1, y1)`.
    fn porosity_in(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> PyResult<f64> {
        geometry::lattice_porosity(&self.lattice, &Rect::new(x0, y0, x1, y1)).map_err(value_error)
    }

    fn cavity_count(&self) -> usize {
        self.lattice.cavity_count()
    }

    /// `(x, y, r)` of every cavity.
    fn cavities(&self) -> Vec<(f64, f64, f64)> {
        self.lattice.cavities().map(|d| (d.x, d.y, d.r)).collect()
    }

    fn bounding_box(&self) -> (f64, f64, f64, f64) {
        let b = self.lattice.bounding_box;
        (b.x0, b.y0, b.x1, b.y1)
    }

    fn geometry_text(&self) -> String {
        self.lattice.to_geometry_text()
    }
}

/// Rows of the design table for models 0-5 under `surface`.
#[pyfunction]
#[pyo3(signature = (surface=None))]
fn design_table<'py>(
    py: Python<'py>,
    surface: Option<PySurfaceSpec>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let surface = surface.map_or_else(SurfaceSpec::default, |s| s.inner);
    let params: Vec<LatticeParams> = (0..=5)
        .map(|m| LatticeParams::model(m).expect("reference model"))
        .collect();
    let rows = design::design_table(&surface, &params).map_err(value_error)?;
    rows.into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("model", r.model_id)?;
            d.set_item("w_l", r.w_l)?;
            d.set_item("w_h", r.w_h)?;
            d.set_item("porosity", r.porosity)?;
            d.set_item("eps_eff", r.eps_eff)?;
            d.set_item("h", r.h)?;
            d.set_item("note", r.note)?;
            Ok(d)
        })
        .collect()
}

fn profile_dict<'py>(py: Python<'py>, p: &CenterlineProfile) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("x", p.x.clone())?;
    d.set_item("p_db", p.p_db.clone())?;
    d.set_item("local_mean_db", p.local_mean_db.clone())?;
    Ok(d)
}

fn resolve(config: &Config, model_id: u8) -> PyResult<(ResolvedModel, CavityLattice)> {
    let model = config.resolve(model_id).map_err(cli_error)?;
    let lattice = model.build_lattice().map_err(cli_error)?;
    Ok((model, lattice))
}

/// Run one channel model at the source frequency and analyse its
/// centerline. `config` is TOML text in the command-line config format.
#[pyfunction]
#[pyo3(signature = (model_id, config=None, threads=None))]
fn simulate<'py>(
    py: Python<'py>,
    model_id: u8,
    config: Option<&str>,
    threads: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut config = load_config(config)?;
    if threads.is_some() {
        config.simulation.threads = threads;
    }
    let (model, lattice) = resolve(&config, model_id)?;
    let mut sim_config = model.simulation.clone();
    sim_config.record_map = true;
    let record = py
        .detach(|| sim::run(&sim_config, &lattice))
        .map_err(sim_error)?;
    let lambda = sim_config.background_wavelength();
    let a = &config.analysis;
    let profile = analysis::extract_centerline(
        &record,
        &model.lattice.channel_interior(),
        a.margins,
        a.reference,
    )
    .and_then(|p| p.with_local_mean(a.window_wavelengths * lambda))
    .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let report = analysis::AnalysisReport::from_profile(
        model_id.to_string(),
        model.porosity,
        &profile,
        lambda,
    )
    .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let out = PyDict::new(py);
    out.set_item("model", model_id)?;
    out.set_item("porosity", model.porosity)?;
    out.set_item("background_index", sim_config.background_index)?;
    out.set_item("sigma", report.sigma)?;
    out.set_item("path_loss", report.path_loss)?;
    out.set_item("steps", record.metadata.steps)?;
    out.set_item(
        "warnings",
        [record.metadata.warnings, report.warnings].concat(),
    )?;
    out.set_item("profile", profile_dict(py, &profile)?)?;
    let g = record.grid;
    out.set_item("grid", (g.x0, g.y0, g.dx, g.nx, g.ny))?;
    out.set_item("amplitude_map", record.amplitude_map)?;
    Ok(out)
}

/// Broadband transmission of a model against its empty channel.
#[pyfunction]
#[pyo3(signature = (model_id, f_lo=22e9, f_hi=33e9, n_points=45, config=None))]
fn sweep<'py>(
    py: Python<'py>,
    model_id: u8,
    f_lo: f64,
    f_hi: f64,
    n_points: usize,
    config: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let config = load_config(config)?;
    let model = config.resolve_sweep(model_id).map_err(cli_error)?;
    let lattice = model.build_lattice().map_err(cli_error)?;
    let sim_config = model.simulation.clone();
    let result = py
        .detach(|| sim::sweep(&sim_config, &lattice, (f_lo, f_hi), n_points))
        .map_err(sim_error)?;
    let out = PyDict::new(py);
    out.set_item("frequencies", result.frequencies.clone())?;
    out.set_item("s21_db", result.s21_db())?;
    out.set_item("s11_db", result.s11_db())?;
    out.set_item("warnings", result.warnings.clone())?;
    let spectrum = Spectrum {
        frequencies: result.frequencies.clone(),
        db: result.s21_db(),
    };
    match analysis::band_metrics(&spectrum) {
        Ok(m) => {
            out.set_item("f_peak", m.f_peak)?;
            out.set_item("peak_db", m.peak_db)?;
            out.set_item("band_3db", m.band_3db)?;
            out.set_item("truncated", m.truncated)?;
        }
        Err(e) => out.set_item("band_error", e.to_string())?,
    }
    Ok(out)
}

/// Peak and contiguous 3-dB band of a dB spectrum.
#[pyfunction]
fn band_metrics<'py>(
    py: Python<'py>,
    frequencies: Vec<f64>,
    db: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let m = analysis::band_metrics(&Spectrum { frequencies, db }).map_err(value_error)?;
    let out = PyDict::new(py);
    out.set_item("f_peak", m.f_peak)?;
    out.set_item("peak_db", m.peak_db)?;
    out.set_item("band_3db", m.band_3db)?;
    out.set_item("truncated", m.truncated)?;
    out.set_item("warnings", m.warnings)?;
    Ok(out)
}

fn profile(x: Vec<f64>, p_db: Vec<f64>, window: f64) -> PyResult<CenterlineProfile> {
    CenterlineProfile::from_db(x, p_db, 1.0)
        .and_then(|p| p.with_local_mean(window))
        .map_err(value_error)
}

/// Population SD of a dB profile about its local mean over `window` metres.
#[pyfunction]
fn fluctuation_sd(x: Vec<f64>, p_db: Vec<f64>, window: f64) -> PyResult<f64> {
    analysis::fluctuation_sd(&profile(x, p_db, window)?).map_err(value_error)
}

/// Path loss (dB/m) fitted to the local mean of a dB profile.
#[pyfunction]
fn path_loss(x: Vec<f64>, p_db: Vec<f64>, wavelength: f64, window: f64) -> PyResult<f64> {
    analysis::path_loss_fit(&profile(x, p_db, window)?, wavelength).map_err(value_error)
}

/// Total field of a unit plane wave around a cylinder at `points`.
#[pyfunction]
#[pyo3(signature = (radius, background_index, frequency, points, conductor=true))]
fn analytic_cylinder_scatter(
    radius: f64,
    background_index: f64,
    frequency: f64,
    points: Vec<(f64, f64)>,
    conductor: bool,
) -> PyResult<Vec<Complex64>> {
    sim::analytic_cylinder_scatter(radius, background_index, frequency, conductor, &points)
        .map_err(sim_error)
}

/// Relative RMS error of the solver against the cylinder series.
#[pyfunction]
fn cylinder_error(py: Python<'_>, grid_step: f64) -> PyResult<f64> {
    py.detach(|| oracle::cylinder_error(grid_step))
        .map_err(sim_error)
}

/// Built-in configuration as TOML text.
#[pyfunction]
fn default_config() -> String {
    Config::default().to_toml()
}

#[pymodule]
fn porosurf(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PySurfaceSpec>()?;
    m.add_class::<PyLattice>()?;
    m.add_function(wrap_pyfunction!(effective_permittivity, m)?)?;
    m.add_function(wrap_pyfunction!(skin_depth, m)?)?;
    m.add_function(wrap_pyfunction!(surface_reactance, m)?)?;
    m.add_function(wrap_pyfunction!(solve_thickness, m)?)?;
    m.add_function(wrap_pyfunction!(effective_index, m)?)?;
    m.add_function(wrap_pyfunction!(porosity_of, m)?)?;
    m.add_function(wrap_pyfunction!(design_table, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(band_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(fluctuation_sd, m)?)?;
    m.add_function(wrap_pyfunction!(path_loss, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_cylinder_scatter, m)?)?;
    m.add_function(wrap_pyfunction!(cylinder_error, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    Ok(())
}
