//! Yee leapfrog for TMz with a convolutional PML.
//!
//! Fields are stored in `f32`, row-major with `y` rows, all arrays sized
//! `nx * ny`. `Hx[j][i]` lives at `(i, j+1/2)`, `Hy[j][i]` at `(i+1/2, j)`.
//! `H` is scaled by the free-space impedance so both updates share the
//! Courant number `S = c dt / dx`. The outermost `Ez` ring is a PEC shell
//! behind the PML.

use rayon::prelude::*;

use crate::material::{C0, ETA0};

use super::grid::{Cell, MaterialGrid};
use super::GridInfo;

type Real = f32;

const PML_GRADING: f64 = 3.0;
const PML_ALPHA_MAX: f64 = 0.05;
/// Normal-incidence round-trip reflection a graded layer is designed for.
const PML_TARGET_REFLECTION: f64 = 1e-8;
const EPS0: f64 = 1.0 / (ETA0 * C0);
const MIN_ROWS_PER_TASK: usize = 8;

/// CPML recursion coefficients along one axis. Index `i` holds the values
/// for the `E` node `i` (`be`, `ce`) and the `H` node `i + 1/2` (`bh`, `ch`).
#[derive(Debug, Clone)]
struct PmlAxis {
    be: Vec<Real>,
    ce: Vec<Real>,
    bh: Vec<Real>,
    ch: Vec<Real>,
    /// Nodes whose `E` update carries a PML term.
    e_nodes: Vec<usize>,
    /// Nodes whose `H` update (at `i + 1/2`) carries a PML term.
    h_nodes: Vec<usize>,
}

impl PmlAxis {
    fn new(n: usize, cells: usize, dx: f64, dt: f64) -> Self {
        let thickness = cells as f64 * dx;
        // thin layers use the usual optimum; deep ones are graded more gently
        // for the same nominal reflection, which matters in periodic media
        let sigma_opt = 0.8 * (PML_GRADING + 1.0) / (ETA0 * dx);
        let sigma_nominal = (PML_GRADING + 1.0) * (1.0 / PML_TARGET_REFLECTION).ln()
            / (2.0 * ETA0 * thickness.max(dx));
        let sigma_max = sigma_opt.min(sigma_nominal);
        let coeffs = |depth: f64| -> (Real, Real) {
            if depth <= 0.0 {
                return (1.0, 0.0);
            }
            let rel = (depth / thickness).min(1.0);
            let sigma = sigma_max * rel.powf(PML_GRADING);
            let alpha = PML_ALPHA_MAX * (1.0 - rel);
            let b = (-(sigma + alpha) * dt / EPS0).exp();
            let c = if sigma + alpha > 0.0 {
                sigma / (sigma + alpha) * (b - 1.0)
            } else {
                0.0
            };
            (b as Real, c as Real)
        };
        let inner_hi = (n - 1 - cells) as f64;
        let e_depth = |i: usize| {
            let i = i as f64;
            ((cells as f64 - i).max(i - inner_hi)).max(0.0) * dx
        };
        let h_depth = |i: usize| {
            let i = i as f64 + 0.5;
            ((cells as f64 - i).max(i - inner_hi)).max(0.0) * dx
        };
        let mut axis = Self {
            be: vec![1.0; n],
            ce: vec![0.0; n],
            bh: vec![1.0; n],
            ch: vec![0.0; n],
            e_nodes: Vec::new(),
            h_nodes: Vec::new(),
        };
        for i in 0..n {
            let (b, c) = coeffs(e_depth(i));
            axis.be[i] = b;
            axis.ce[i] = c;
            if i > 0 && i < n - 1 && e_depth(i) > 0.0 {
                axis.e_nodes.push(i);
            }
            if i < n - 1 {
                let (b, c) = coeffs(h_depth(i));
                axis.bh[i] = b;
                axis.ch[i] = c;
                if h_depth(i) > 0.0 {
                    axis.h_nodes.push(i);
                }
            }
        }
        axis
    }
}

/// Time-stepping state for one run.
#[derive(Debug, Clone)]
pub struct Solver {
    info: GridInfo,
    courant: Real,
    dt: f64,
    ez: Vec<Real>,
    hx: Vec<Real>,
    hy: Vec<Real>,
    ca: Vec<Real>,
    cb: Vec<Real>,
    px: PmlAxis,
    py: PmlAxis,
    // x-slab memories: [j * ncols + k], k indexes px.{e,h}_nodes
    psi_ez_x: Vec<Real>,
    psi_hy_x: Vec<Real>,
    // y-slab memories: [k * nx + i], k indexes py.{e,h}_nodes
    psi_ez_y: Vec<Real>,
    psi_hx_y: Vec<Real>,
    steps: usize,
}

impl Solver {
    /// Build a solver for `material` with time step `dt`, a PML of
    /// `pml_cells = (x ends, y sides)` and a uniform loss rate `loss_rate`
    /// (`sigma/epsilon`, 1/s). No stability check is made here.
    pub fn new(
        material: &MaterialGrid,
        dt: f64,
        pml_cells: (usize, usize),
        loss_rate: f64,
    ) -> Self {
        let info = material.info;
        let n = info.len();
        let courant = C0 * dt / info.dx;
        let damp = 0.5 * loss_rate * dt;
        let mut ca = vec![0.0; n];
        let mut cb = vec![0.0; n];
        for (idx, cell) in material.cells.iter().enumerate() {
            let (i, j) = (idx % info.nx, idx / info.nx);
            let edge = i == 0 || j == 0 || i == info.nx - 1 || j == info.ny - 1;
            let eps = match cell {
                Cell::Background => material.background_index.powi(2),
                Cell::Cavity => material.cavity_index.powi(2),
                Cell::Conductor => continue,
            };
            if edge {
                continue;
            }
            ca[idx] = ((1.0 - damp) / (1.0 + damp)) as Real;
            cb[idx] = (courant / eps / (1.0 + damp)) as Real;
        }
        let px = PmlAxis::new(info.nx, pml_cells.0, info.dx, dt);
        let py = PmlAxis::new(info.ny, pml_cells.1, info.dx, dt);
        Self {
            psi_ez_x: vec![0.0; info.ny * px.e_nodes.len()],
            psi_hy_x: vec![0.0; info.ny * px.h_nodes.len()],
            psi_ez_y: vec![0.0; py.e_nodes.len() * info.nx],
            psi_hx_y: vec![0.0; py.h_nodes.len() * info.nx],
            info,
            courant: courant as Real,
            dt,
            ez: vec![0.0; n],
            hx: vec![0.0; n],
            hy: vec![0.0; n],
            ca,
            cb,
            px,
            py,
            steps: 0,
        }
    }

    pub fn grid(&self) -> &GridInfo {
        &self.info
    }

    pub fn time_step(&self) -> f64 {
        self.dt
    }

    /// Completed full steps.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn ez(&self) -> &[f32] {
        &self.ez
    }

    pub fn ez_at(&self, idx: usize) -> f64 {
        self.ez[idx] as f64
    }

    /// Add to `Ez` at a node (soft source). Conductor nodes stay at zero.
    pub fn add_ez(&mut self, idx: usize, value: f64) {
        if self.cb[idx] != 0.0 {
            self.ez[idx] += value as Real;
        }
    }

    pub fn set_ez(&mut self, idx: usize, value: f64) {
        self.ez[idx] = value as Real;
    }

    /// Largest `|Ez|`; NaN propagates as infinity.
    pub fn max_abs_ez(&self) -> f64 {
        self.ez.iter().fold(0.0f64, |acc, &v| {
            let a = (v as f64).abs();
            if a.is_nan() {
                f64::INFINITY
            } else {
                acc.max(a)
            }
        })
    }

    /// Discrete field energy (up to a constant factor), for stability tests.
    pub fn energy(&self) -> f64 {
        let e: f64 = self
            .ez
            .iter()
            .zip(&self.cb)
            .filter(|(_, &cb)| cb != 0.0)
            .map(|(&e, &cb)| (e as f64).powi(2) * self.courant as f64 / cb as f64)
            .sum();
        let h: f64 = self
            .hx
            .iter()
            .chain(&self.hy)
            .map(|&h| (h as f64).powi(2))
            .sum();
        e + h
    }

    /// Advance `H` by one step (to `t + dt/2`).
    pub fn step_h(&mut self) {
        let nx = self.info.nx;
        let ny = self.info.ny;
        let s = self.courant;
        let ez = &self.ez;
        self.hx
            .par_chunks_mut(nx)
            .zip(self.hy.par_chunks_mut(nx))
            .enumerate()
            .with_min_len(MIN_ROWS_PER_TASK)
            .for_each(|(j, (hx_row, hy_row))| {
                let row = &ez[j * nx..(j + 1) * nx];
                if j + 1 < ny {
                    let up = &ez[(j + 1) * nx..(j + 2) * nx];
                    for ((h, &a), &b) in hx_row.iter_mut().zip(row).zip(up) {
                        *h -= s * (b - a);
                    }
                }
                for (h, w) in hy_row[..nx - 1].iter_mut().zip(row.windows(2)) {
                    *h += s * (w[1] - w[0]);
                }
            });

        let ncols = self.px.h_nodes.len();
        for j in 0..ny {
            let row = j * nx;
            for (k, &i) in self.px.h_nodes.iter().enumerate() {
                let psi = &mut self.psi_hy_x[j * ncols + k];
                *psi = self.px.bh[i] * *psi
                    + self.px.ch[i] * (self.ez[row + i + 1] - self.ez[row + i]);
                self.hy[row + i] += s * *psi;
            }
        }
        for (k, &j) in self.py.h_nodes.iter().enumerate() {
            let (b, c) = (self.py.bh[j], self.py.ch[j]);
            let psi_row = &mut self.psi_hx_y[k * nx..(k + 1) * nx];
            let lo = &self.ez[j * nx..(j + 1) * nx];
            let hi = &self.ez[(j + 1) * nx..(j + 2) * nx];
            let hx_row = &mut self.hx[j * nx..(j + 1) * nx];
            for i in 0..nx {
                psi_row[i] = b * psi_row[i] + c * (hi[i] - lo[i]);
                hx_row[i] -= s * psi_row[i];
            }
        }
    }

    /// Advance `Ez` by one step (to `t + dt`).
    pub fn step_e(&mut self) {
        let nx = self.info.nx;
        let ny = self.info.ny;
        let (hx, hy, ca, cb) = (&self.hx, &self.hy, &self.ca, &self.cb);
        self.ez
            .par_chunks_mut(nx)
            .enumerate()
            .with_min_len(MIN_ROWS_PER_TASK)
            .for_each(|(j, ez_row)| {
                if j == 0 || j + 1 == ny {
                    return;
                }
                let o = j * nx;
                let hy_row = &hy[o..o + nx];
                let hx_row = &hx[o..o + nx];
                let hx_dn = &hx[o - nx..o];
                let ca_row = &ca[o..o + nx];
                let cb_row = &cb[o..o + nx];
                for i in 1..nx - 1 {
                    let curl = (hy_row[i] - hy_row[i - 1]) - (hx_row[i] - hx_dn[i]);
                    ez_row[i] = ca_row[i] * ez_row[i] + cb_row[i] * curl;
                }
            });

        let ncols = self.px.e_nodes.len();
        for j in 1..ny - 1 {
            let row = j * nx;
            for (k, &i) in self.px.e_nodes.iter().enumerate() {
                let psi = &mut self.psi_ez_x[j * ncols + k];
                *psi = self.px.be[i] * *psi
                    + self.px.ce[i] * (self.hy[row + i] - self.hy[row + i - 1]);
                self.ez[row + i] += self.cb[row + i] * *psi;
            }
        }
        for (k, &j) in self.py.e_nodes.iter().enumerate() {
            let (b, c) = (self.py.be[j], self.py.ce[j]);
            let psi_row = &mut self.psi_ez_y[k * nx..(k + 1) * nx];
            let hx_row = &self.hx[j * nx..(j + 1) * nx];
            let hx_dn = &self.hx[(j - 1) * nx..j * nx];
            let o = j * nx;
            for i in 1..nx - 1 {
                psi_row[i] = b * psi_row[i] + c * (hx_row[i] - hx_dn[i]);
                self.ez[o + i] -= self.cb[o + i] * psi_row[i];
            }
        }
        self.steps += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CavityLattice, Rect};
    use crate::sim::{rasterize, SimulationConfig};

    fn box_grid(n: usize, dx: f64) -> MaterialGrid {
        let side = (n - 1) as f64 * dx;
        let lattice = CavityLattice::empty(Rect::new(0.0, 0.0, side, side));
        let config = SimulationConfig {
            grid_step: dx,
            background_index: 1.0,
            ..SimulationConfig::default()
        };
        rasterize(&lattice, &config).unwrap()
    }

    #[test]
    fn pml_profile_is_graded() {
        let axis = PmlAxis::new(100, 10, 1e-4, 1e-13);
        assert_eq!(axis.e_nodes.first(), Some(&1));
        assert_eq!(axis.e_nodes.len(), 18);
        assert_eq!(axis.h_nodes.len(), 20);
        assert_eq!(axis.ce[50], 0.0);
        assert!(axis.ce[2] < axis.ce[8]);
        assert!(axis.ce[97] < axis.ce[91]);
    }

    #[test]
    fn zero_fields_stay_zero() {
        let grid = box_grid(40, 1e-4);
        let dt = 0.99 * 1e-4 / (C0 * 2f64.sqrt());
        let mut solver = Solver::new(&grid, dt, (8, 8), 0.0);
        for _ in 0..200 {
            solver.step_h();
            solver.step_e();
        }
        assert_eq!(solver.max_abs_ez(), 0.0);
    }

    #[test]
    fn energy_bounded_in_closed_box() {
        // no PML (the PEC shell closes the box); a kicked field must neither
        // grow nor decay substantially
        let grid = box_grid(32, 1e-4);
        let dt = 0.99 * 1e-4 / (C0 * 2f64.sqrt());
        let mut solver = Solver::new(&grid, dt, (0, 0), 0.0);
        let nx = grid.info.nx;
        solver.set_ez(16 * nx + 16, 1.0);
        solver.set_ez(10 * nx + 20, -0.5);
        solver.step_h();
        let e0 = solver.energy();
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for step in 0..100_000 {
            solver.step_e();
            solver.step_h();
            if step % 97 == 0 {
                let e = solver.energy();
                lo = lo.min(e);
                hi = hi.max(e);
            }
        }
        assert!(
            hi < 2.0 * e0 && lo > 0.5 * e0,
            "energy range [{lo}, {hi}] vs {e0}"
        );
        assert!(solver.max_abs_ez().is_finite());
    }

    #[test]
    fn supercritical_step_blows_up() {
        let grid = box_grid(32, 1e-4);
        let dt = 1.3 * 1e-4 / (C0 * 2f64.sqrt());
        let mut solver = Solver::new(&grid, dt, (0, 0), 0.0);
        solver.set_ez(16 * grid.info.nx + 16, 1.0);
        for _ in 0..2000 {
            solver.step_h();
            solver.step_e();
        }
        assert!(solver.max_abs_ez() > 1e6);
    }
}
