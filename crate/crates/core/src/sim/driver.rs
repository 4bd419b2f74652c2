//! Run orchestration: sources, settling, steady-state extraction, probes.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;

use crate::geometry::{CavityLattice, Rect};
use crate::material::C0;

use super::grid::{rasterize, Cell, GridInfo, MaterialGrid};
use super::kernel::Solver;
use super::{
    config_error, Extraction, FieldRecord, Probe, ProbeSeries, ProbeSpectrum, Profile, Result,
    RunMetadata, SimError, SimulationConfig, SourceShape, Waveform, DFT_SAMPLES_PER_PERIOD,
};

const DIVERGENCE_FACTOR: f64 = 1e6;
const PULSE_DECAY: f64 = 1e-4;
const NEPER_PER_DB: f64 = std::f64::consts::LN_10 / 20.0;

type Maps = (Option<Vec<f64>>, Option<Vec<Complex64>>);

/// Time for a background-index wave to cross the longest side of `domain`.
pub fn transit_time(config: &SimulationConfig, domain: &Rect) -> f64 {
    domain.width().max(domain.height()) * config.background_index / C0
}

/// Simulate `lattice` under `config`.
///
/// Continuous-wave runs settle for the ramp plus `settle_transits` transit
/// times, then extract the field over windows of `window_periods` periods
/// until two consecutive windows agree to `convergence_tol`. Pulse runs step
/// until the field has decayed to `1e-4` of its peak or `pulse_transits`
/// transit times have passed after the pulse.
pub fn run(config: &SimulationConfig, lattice: &CavityLattice) -> Result<FieldRecord> {
    config.validate()?;
    for disk in &lattice.disks {
        if config.grid_step > disk.r / 5.0 * (1.0 + 1e-9) {
            return Err(SimError::Resolution(format!(
                "grid_step {:.3e} m exceeds r/5 = {:.3e} m",
                config.grid_step,
                disk.r / 5.0
            )));
        }
    }
    let material = rasterize(lattice, config)?;
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| config_error("threads", e.to_string()))?
            .install(|| execute(config, &material)),
        None => execute(config, &material),
    }
}

/// Damping rate `sigma/epsilon` giving the requested modal attenuation.
fn loss_rate(config: &SimulationConfig) -> Result<f64> {
    let Some(att) = config.attenuation else {
        return Ok(0.0);
    };
    let alpha = att.db_per_m * NEPER_PER_DB;
    let v = C0 / config.background_index;
    let group_velocity = match att.guide_width {
        None => v,
        Some(w) => {
            let k = 2.0 * PI * config.source.frequency / v;
            let kc = PI / w;
            if !(w > 0.0) || k <= kc {
                return Err(config_error(
                    "attenuation.guide_width",
                    format!("source frequency is below the cutoff of a {w:.3e} m channel"),
                ));
            }
            v * (1.0 - (kc / k).powi(2)).sqrt()
        }
    };
    Ok(2.0 * alpha * group_velocity)
}

fn raised_cosine(t: f64, length: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= length {
        1.0
    } else {
        0.5 * (1.0 - (PI * t / length).cos())
    }
}

/// Source time function (unit amplitude).
#[derive(Debug, Clone, Copy)]
enum Signal {
    Cw { omega: f64, ramp: f64 },
    Pulse { omega: f64, t0: f64, tau: f64 },
}

impl Signal {
    fn new(config: &SimulationConfig) -> Self {
        let f = config.source.frequency;
        match config.source.waveform {
            Waveform::ContinuousWave { ramp_periods } => Signal::Cw {
                omega: 2.0 * PI * f,
                ramp: ramp_periods / f,
            },
            Waveform::GaussianPulse { f_lo, f_hi } => {
                let tau = 1.0 / (PI * 0.5 * (f_hi - f_lo));
                Signal::Pulse {
                    omega: PI * (f_lo + f_hi),
                    t0: 4.0 * tau,
                    tau,
                }
            }
        }
    }

    fn at(&self, t: f64) -> f64 {
        match *self {
            Signal::Cw { omega, ramp } => raised_cosine(t, ramp) * (omega * t).sin(),
            Signal::Pulse { omega, t0, tau } => {
                let u = t - t0;
                (-(u / tau).powi(2)).exp() * (omega * u).sin()
            }
        }
    }

    /// Time after which the source is effectively off.
    fn duration(&self) -> f64 {
        match *self {
            Signal::Cw { ramp, .. } => ramp,
            Signal::Pulse { t0, .. } => 2.0 * t0,
        }
    }
}

/// Nodes fed by the source and their weights.
fn source_nodes(config: &SimulationConfig, material: &MaterialGrid) -> Vec<(usize, f64)> {
    let info = &material.info;
    match config.source.shape {
        SourceShape::Point { x, y } => {
            let (i, j) = info.nearest(x, y);
            vec![(j * info.nx + i, 1.0)]
        }
        SourceShape::Aperture {
            x,
            y_center,
            width,
            profile,
        } => {
            let (i, _) = info.nearest(x, y_center);
            (0..info.ny)
                .filter_map(|j| {
                    let u = (info.y(j) - y_center) / (0.5 * width);
                    if u.abs() > 1.0 || material.cell(i, j) == Cell::Conductor {
                        return None;
                    }
                    let w = match profile {
                        Profile::HalfCosine => (0.5 * PI * u).cos(),
                        Profile::Uniform => 1.0,
                    };
                    Some((j * info.nx + i, w))
                })
                .collect()
        }
        SourceShape::PlaneWave => Vec::new(),
    }
}

/// Scattered-field bookkeeping for the plane-wave source. The incident wave
/// `A r(t') sin(w t')`, `t' = t - (x - x0) n / c`, fills the background.
struct PlaneWave {
    amplitude: f64,
    signal: Signal,
    /// Delay per node column.
    delay: Vec<f64>,
    omega: f64,
    conductors: Vec<usize>,
    /// Dielectric nodes and their `1 - eps_bg/eps` factor.
    dielectrics: Vec<(usize, f64)>,
}

impl PlaneWave {
    fn new(config: &SimulationConfig, material: &MaterialGrid) -> Self {
        let info = &material.info;
        let n = material.background_index;
        let delay = (0..info.nx)
            .map(|i| (info.x(i) - info.x0) * n / C0)
            .collect();
        let mut conductors = Vec::new();
        let mut dielectrics = Vec::new();
        let contrast = 1.0 - (n / material.cavity_index).powi(2);
        for (idx, cell) in material.cells.iter().enumerate() {
            match cell {
                Cell::Conductor => conductors.push(idx),
                Cell::Cavity if contrast != 0.0 => dielectrics.push((idx, contrast)),
                _ => {}
            }
        }
        Self {
            amplitude: config.source.amplitude,
            signal: Signal::new(config),
            delay,
            omega: 2.0 * PI * config.source.frequency,
            conductors,
            dielectrics,
        }
    }

    fn incident(&self, info: &GridInfo, idx: usize, t: f64) -> f64 {
        self.amplitude * self.signal.at(t - self.delay[idx % info.nx])
    }

    fn incident_phasor(&self, info: &GridInfo, idx: usize) -> Complex64 {
        Complex64::new(0.0, -self.amplitude)
            * Complex64::from_polar(1.0, -self.omega * self.delay[idx % info.nx])
    }

    /// Correct the scattered field after the `E` update from `t` to `t + dt`.
    fn apply(&self, solver: &mut Solver, t: f64, dt: f64) {
        let info = *solver.grid();
        for &(idx, contrast) in &self.dielectrics {
            let change = self.incident(&info, idx, t + dt) - self.incident(&info, idx, t);
            let v = solver.ez_at(idx) - contrast * change;
            solver.set_ez(idx, v);
        }
        for &idx in &self.conductors {
            let (i, j) = (idx % info.nx, idx / info.nx);
            if i == 0 || j == 0 || i == info.nx - 1 || j == info.ny - 1 {
                continue;
            }
            solver.set_ez(idx, -self.incident(&info, idx, t + dt));
        }
    }
}

/// One window of steady-state extraction.
struct Window {
    samples: usize,
    stride: usize,
    re: Vec<f64>,
    im: Vec<f64>,
    peak: Vec<f64>,
    probe_acc: Vec<Complex64>,
    taken: usize,
}

impl Window {
    fn new(
        len: usize,
        map: bool,
        extraction: Extraction,
        samples: usize,
        stride: usize,
        probes: usize,
    ) -> Self {
        let dft = map && extraction == Extraction::Dft;
        let peak = map && extraction == Extraction::Peak;
        Self {
            samples,
            stride,
            re: if dft { vec![0.0; len] } else { Vec::new() },
            im: if dft { vec![0.0; len] } else { Vec::new() },
            peak: if peak { vec![0.0; len] } else { Vec::new() },
            probe_acc: vec![Complex64::new(0.0, 0.0); probes],
            taken: 0,
        }
    }

    fn reset(&mut self) {
        self.re.iter_mut().for_each(|v| *v = 0.0);
        self.im.iter_mut().for_each(|v| *v = 0.0);
        self.peak.iter_mut().for_each(|v| *v = 0.0);
        self.probe_acc
            .iter_mut()
            .for_each(|v| *v = Complex64::new(0.0, 0.0));
        self.taken = 0;
    }

    fn complete(&self) -> bool {
        self.taken == self.samples
    }
}

fn norm_change(current: &[f64], previous: &[f64]) -> f64 {
    let mut diff = 0.0;
    let mut norm = 0.0;
    for (a, b) in current.iter().zip(previous) {
        diff += (a - b) * (a - b);
        norm += a * a;
    }
    if norm == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (diff / norm).sqrt()
    }
}

fn execute(config: &SimulationConfig, material: &MaterialGrid) -> Result<FieldRecord> {
    let started = Instant::now();
    let info = material.info;
    let domain = Rect::new(info.x0, info.y0, info.x(info.nx - 1), info.y(info.ny - 1));
    let plane_wave = matches!(config.source.shape, SourceShape::PlaneWave);
    let pulse = matches!(config.source.waveform, Waveform::GaussianPulse { .. });
    if plane_wave && config.extraction == Extraction::Peak && config.record_map {
        return Err(config_error(
            "extraction",
            "peak extraction is not available with the plane-wave source",
        ));
    }
    if 2 * config.pml_cells + 3 > info.ny || 2 * config.pml_x() + 3 > info.nx {
        return Err(config_error(
            "pml_cells",
            format!(
                "{}/{} absorber cells do not fit a {}x{} grid",
                config.pml_x(),
                config.pml_cells,
                info.nx,
                info.ny
            ),
        ));
    }
    let mut warnings = Vec::new();
    let mut probe_nodes = Vec::with_capacity(config.probes.len());
    for probe in &config.probes {
        if !domain.contains(probe.x, probe.y) {
            return Err(config_error(
                "probes",
                format!(
                    "probe {} at ({:e}, {:e}) lies outside the domain",
                    probe.name, probe.x, probe.y
                ),
            ));
        }
        let (i, j) = info.nearest(probe.x, probe.y);
        if material.cell(i, j) == Cell::Conductor {
            warnings.push(format!("probe {} sits on a conductor node", probe.name));
        }
        probe_nodes.push(j * info.nx + i);
    }

    let dt = config.time_step(material.min_index());
    let mut solver = Solver::new(
        material,
        dt,
        (config.pml_x(), config.pml_cells),
        loss_rate(config)?,
    );
    let signal = Signal::new(config);
    let sources = source_nodes(config, material);
    let pw = plane_wave.then(|| PlaneWave::new(config, material));
    let amplitude = config.source.amplitude;
    let limit = DIVERGENCE_FACTOR * amplitude.max(1.0);

    let mut series: Vec<Vec<f64>> = vec![Vec::new(); probe_nodes.len()];
    let freqs = &config.spectrum_frequencies;
    let rotators: Vec<Complex64> = freqs
        .iter()
        .map(|&f| Complex64::from_polar(1.0, -2.0 * PI * f * dt))
        .collect();
    let mut phases = vec![Complex64::new(1.0, 0.0); freqs.len()];
    let mut spectra = vec![vec![Complex64::new(0.0, 0.0); freqs.len()]; probe_nodes.len()];

    let total_at = |solver: &Solver, idx: usize, t: f64| -> f64 {
        let s = solver.ez_at(idx);
        match &pw {
            Some(pw) => s + pw.incident(&info, idx, t),
            None => s,
        }
    };

    // CW extraction state
    let period_steps = (1.0 / (config.source.frequency * dt)).round() as usize;
    let stride = (period_steps / DFT_SAMPLES_PER_PERIOD).max(1);
    let settle_time = signal.duration() + config.settle_transits * transit_time(config, &domain);
    let settle_steps = (settle_time / dt).ceil() as usize;
    let window_samples = config.window_periods * DFT_SAMPLES_PER_PERIOD;
    let mut window = Window::new(
        info.len(),
        config.record_map && !pulse,
        config.extraction,
        window_samples,
        stride,
        probe_nodes.len(),
    );
    let omega = 2.0 * PI * config.source.frequency;
    let mut previous: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut last_change = f64::INFINITY;
    let mut converged = false;
    let mut result_maps: Option<Maps> = None;

    // pulse decay state
    let mut pulse_peak: f64 = 0.0;
    let pulse_end = signal.duration() + config.pulse_transits * transit_time(config, &domain);
    let mut residual = 0.0;

    let mut n = 0usize;
    while n < config.max_steps {
        let t = n as f64 * dt;
        solver.step_h();
        solver.step_e();
        let t_next = t + dt;
        if let Some(pw) = &pw {
            pw.apply(&mut solver, t, dt);
        } else if amplitude != 0.0 {
            let s = amplitude * signal.at(t_next);
            for &(idx, w) in &sources {
                solver.add_ez(idx, w * s);
            }
        }
        n += 1;

        for (k, &idx) in probe_nodes.iter().enumerate() {
            let e = total_at(&solver, idx, t_next);
            series[k].push(e);
            for (f, phase) in phases.iter().enumerate() {
                spectra[k][f] += e * *phase * dt;
            }
        }
        for (phase, rot) in phases.iter_mut().zip(&rotators) {
            *phase *= rot;
        }

        if n.is_multiple_of(config.check_interval) || n == config.max_steps {
            let m = solver.max_abs_ez();
            if !(m <= limit) {
                return Err(SimError::Unstable {
                    step: n,
                    magnitude: m,
                });
            }
            if pulse {
                pulse_peak = pulse_peak.max(m);
                if t_next > signal.duration() && m < PULSE_DECAY * pulse_peak {
                    converged = true;
                    break;
                }
                if t_next > pulse_end {
                    residual = m / pulse_peak;
                    break;
                }
            }
        }
        if pulse || n < settle_steps {
            continue;
        }

        let offset = n - settle_steps;
        if config.extraction == Extraction::Peak {
            for (p, &e) in window.peak.iter_mut().zip(solver.ez()) {
                *p = p.max((e as f64).abs());
            }
        }
        if offset.is_multiple_of(window.stride) {
            let (s, c) = (omega * t_next).sin_cos();
            let scale = 2.0 / window.samples as f64;
            if !window.re.is_empty() {
                for ((re, im), &e) in window
                    .re
                    .iter_mut()
                    .zip(window.im.iter_mut())
                    .zip(solver.ez())
                {
                    let e = e as f64 * scale;
                    *re += e * c;
                    *im -= e * s;
                }
            }
            for (k, &idx) in probe_nodes.iter().enumerate() {
                window.probe_acc[k] += Complex64::new(c, -s) * (solver.ez_at(idx) * scale);
            }
            window.taken += 1;
        }
        if !window.complete() {
            continue;
        }

        let phasors: Option<Vec<Complex64>> = (!window.re.is_empty()).then(|| {
            window
                .re
                .iter()
                .zip(&window.im)
                .enumerate()
                .map(|(idx, (&re, &im))| {
                    let v = Complex64::new(re, im);
                    match &pw {
                        Some(pw) => v + pw.incident_phasor(&info, idx),
                        None => v,
                    }
                })
                .collect()
        });
        let amplitudes: Option<Vec<f64>> = match config.extraction {
            Extraction::Dft => phasors
                .as_ref()
                .map(|p| p.iter().map(|v| v.norm()).collect()),
            Extraction::Peak => (!window.peak.is_empty()).then(|| window.peak.clone()),
        };
        let probe_amps: Vec<f64> = window
            .probe_acc
            .iter()
            .zip(&probe_nodes)
            .map(|(v, &idx)| match &pw {
                Some(pw) => (v + pw.incident_phasor(&info, idx)).norm(),
                None => v.norm(),
            })
            .collect();
        let current = (amplitudes.clone().unwrap_or_default(), probe_amps);
        if let Some((prev_map, prev_probes)) = &previous {
            last_change =
                norm_change(&current.0, prev_map).max(norm_change(&current.1, prev_probes));
            if last_change < config.convergence_tol {
                converged = true;
            }
        } else if current.0.is_empty() && current.1.is_empty() {
            last_change = 0.0;
            converged = true;
        }
        previous = Some(current);
        if converged {
            result_maps = Some((
                amplitudes.filter(|_| config.record_map),
                phasors.filter(|_| config.record_map),
            ));
            break;
        }
        window.reset();
    }

    if !converged {
        if pulse && residual > 0.0 {
            warnings.push(format!(
                "stopped {} transit times after the pulse with the field at {residual:.2e} of its peak",
                config.pulse_transits
            ));
        } else if pulse {
            warnings.push(format!(
                "field did not decay below {PULSE_DECAY:e} of its peak within {} steps; spectra are truncated",
                config.max_steps
            ));
        } else {
            return Err(SimError::NotConverged {
                steps: n,
                change: last_change,
            });
        }
    }
    let (amplitude_map, phasor_map) = result_maps.unwrap_or((None, None));

    let probes: Vec<Probe> = config.probes.clone();
    let probe_series = probes
        .iter()
        .cloned()
        .zip(series)
        .map(|(probe, values)| ProbeSeries { probe, values })
        .collect();
    let probe_spectra = if freqs.is_empty() {
        Vec::new()
    } else {
        probes
            .into_iter()
            .zip(spectra)
            .map(|(probe, values)| ProbeSpectrum {
                probe,
                frequencies: freqs.clone(),
                values,
            })
            .collect()
    };

    Ok(FieldRecord {
        grid: info,
        amplitude_map,
        phasor_map,
        probe_series,
        probe_spectra,
        metadata: RunMetadata {
            config: config.clone(),
            time_step: dt,
            steps: n,
            converged,
            last_change: if pulse { 0.0 } else { last_change },
            wall_clock_s: started.elapsed().as_secs_f64(),
            warnings,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raised_cosine_ramp() {
        assert_eq!(raised_cosine(-1.0, 2.0), 0.0);
        assert!((raised_cosine(1.0, 2.0) - 0.5).abs() < 1e-15);
        assert_eq!(raised_cosine(3.0, 2.0), 1.0);
        assert_eq!(raised_cosine(0.5, 0.0), 1.0);
    }

    #[test]
    fn attenuation_rate() {
        let mut config = SimulationConfig::default();
        assert_eq!(loss_rate(&config).unwrap(), 0.0);
        config.attenuation = Some(super::super::Attenuation {
            db_per_m: 20.0 / std::f64::consts::LN_10,
            guide_width: None,
        });
        // 1 Np/m at the background phase velocity
        let expected = 2.0 * C0 / config.background_index;
        assert!((loss_rate(&config).unwrap() - expected).abs() / expected < 1e-12);
        config.attenuation.as_mut().unwrap().guide_width = Some(1e-3);
        assert!(loss_rate(&config).is_err());
    }

    #[test]
    fn window_changes() {
        assert_eq!(norm_change(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert_eq!(norm_change(&[0.0], &[1.0]), f64::INFINITY);
        assert!((norm_change(&[1.0, 0.0], &[0.9, 0.0]) - 0.1).abs() < 1e-12);
    }
}
