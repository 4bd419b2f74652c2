//! Solver checks against closed-form references: cylinder scattering,
//! cylindrical spreading and boundary reflectivity.

use std::f64::consts::PI;

use crate::geometry::{CavityLattice, Disk, DiskKind, Rect};
use crate::sim::{
    analytic_cylinder_scatter, run, Probe, Result, SimulationConfig, SourceConfig, SourceShape,
    Waveform,
};

pub const CYLINDER_RADIUS: f64 = 0.5e-3;
pub const CYLINDER_BACKGROUND: f64 = 1.23;
pub const CYLINDER_CIRCLE: f64 = 5e-3;
pub const FREQUENCY: f64 = 26e9;

/// Relative RMS difference between the simulated and analytic total-field
/// amplitude on a circle around a conducting cylinder.
pub fn cylinder_error(grid_step: f64) -> Result<f64> {
    let half = 10e-3;
    let mut lattice = CavityLattice::empty(Rect::new(-half, -half, half, half));
    lattice.disks.push(Disk {
        kind: DiskKind::Conductor,
        x: 0.0,
        y: 0.0,
        r: CYLINDER_RADIUS,
    });
    let config = SimulationConfig {
        grid_step,
        background_index: CYLINDER_BACKGROUND,
        source: SourceConfig {
            frequency: FREQUENCY,
            shape: SourceShape::PlaneWave,
            ..SourceConfig::default()
        },
        ..SimulationConfig::default()
    };
    let record = run(&config, &lattice)?;
    let points: Vec<(f64, f64)> = (0..72)
        .map(|k| {
            let phi = k as f64 * PI / 36.0;
            (CYLINDER_CIRCLE * phi.cos(), CYLINDER_CIRCLE * phi.sin())
        })
        .collect();
    let exact = analytic_cylinder_scatter(
        CYLINDER_RADIUS,
        CYLINDER_BACKGROUND,
        FREQUENCY,
        true,
        &points,
    )?;
    let (mut num, mut den) = (0.0, 0.0);
    for (p, e) in points.iter().zip(&exact) {
        let a = record.amplitude_at(p.0, p.1).unwrap_or(0.0);
        num += (a - e.norm()).powi(2);
        den += e.norm_sqr();
    }
    Ok((num / den).sqrt())
}

/// Amplitude ratio between 50 mm and 100 mm from a CW line source in a
/// uniform medium; cylindrical spreading gives `sqrt(2)`.
pub fn spreading_ratio(grid_step: f64) -> Result<f64> {
    let lattice = CavityLattice::empty(Rect::new(-30e-3, -40e-3, 130e-3, 40e-3));
    let config = SimulationConfig {
        grid_step,
        background_index: CYLINDER_BACKGROUND,
        source: SourceConfig {
            frequency: FREQUENCY,
            shape: SourceShape::Point { x: 0.0, y: 0.0 },
            ..SourceConfig::default()
        },
        probes: vec![
            Probe::new("near", 50e-3, 0.0),
            Probe::new("far", 100e-3, 0.0),
        ],
        ..SimulationConfig::default()
    };
    let record = run(&config, &lattice)?;
    let near = record.amplitude_at(50e-3, 0.0).unwrap_or(f64::NAN);
    let far = record.amplitude_at(100e-3, 0.0).unwrap_or(f64::NAN);
    Ok(near / far)
}

/// Largest difference between a pulse recorded near the absorber of a small
/// empty domain and the same pulse in a domain large enough that its own
/// boundary echoes arrive after the comparison window, relative to the peak.
pub fn boundary_reflection(grid_step: f64) -> Result<f64> {
    boundary_reflection_with(grid_step, SimulationConfig::default().pml_cells)
}

/// [`boundary_reflection`] with an explicit absorber depth.
pub fn boundary_reflection_with(grid_step: f64, pml_cells: usize) -> Result<f64> {
    let probes = vec![
        Probe::new("axial", 20e-3, 0.0),
        Probe::new("diagonal", 14e-3, 14e-3),
    ];
    let base = SimulationConfig {
        grid_step,
        background_index: CYLINDER_BACKGROUND,
        record_map: false,
        source: SourceConfig {
            frequency: FREQUENCY,
            waveform: Waveform::GaussianPulse {
                f_lo: 22e9,
                f_hi: 33e9,
            },
            shape: SourceShape::Point { x: 0.0, y: 0.0 },
            ..SourceConfig::default()
        },
        probes,
        pml_cells,
        ..SimulationConfig::default()
    };
    // pulse plus the echo from the small domain, well before the large
    // domain's echo (280 mm of extra path) can arrive
    let window = 0.85e-9;
    let dt = base.time_step(CYLINDER_BACKGROUND);
    let steps = (window / dt).ceil() as usize;
    let config = SimulationConfig {
        max_steps: steps,
        ..base
    };
    let small = run(
        &config,
        &CavityLattice::empty(Rect::new(-30e-3, -30e-3, 30e-3, 30e-3)),
    )?;
    let large = run(
        &config,
        &CavityLattice::empty(Rect::new(-150e-3, -150e-3, 150e-3, 150e-3)),
    )?;
    let mut worst: f64 = 0.0;
    for (s, l) in small.probe_series.iter().zip(&large.probe_series) {
        let n = s.values.len().min(l.values.len());
        let peak = l.values[..n].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = s.values[..n]
            .iter()
            .zip(&l.values[..n])
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        worst = worst.max(diff / peak);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thin_absorber_reflects_more() {
        let deep = boundary_reflection_with(0.4e-3, 20).unwrap();
        let thin = boundary_reflection_with(0.4e-3, 4).unwrap();
        assert!(deep < 0.01, "{deep}");
        assert!(thin > 3.0 * deep, "{thin} vs {deep}");
    }
}
