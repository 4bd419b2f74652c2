//! Rasterization of a [`CavityLattice`] onto the simulation grid.

use serde::{Deserialize, Serialize};

use crate::geometry::{CavityLattice, DiskKind, Rect};

use super::{SimError, SimulationConfig};

/// Smallest number of cells a disk diameter may span.
pub const MIN_CELLS_PER_DIAMETER: f64 = 6.0;

/// Placement of the `Ez` nodes: node `(i, j)` sits at
/// `(x0 + i*dx, y0 + j*dx)`; maps are stored row-major with `j` as the row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub x0: f64,
    pub y0: f64,
}

impl GridInfo {
    pub fn covering(domain: &Rect, dx: f64) -> Self {
        let nx = (domain.width() / dx).round() as usize + 1;
        let ny = (domain.height() / dx).round() as usize + 1;
        Self {
            nx,
            ny,
            dx,
            x0: domain.x0,
            y0: domain.y0,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.dx
    }

    /// Nearest node to a point, clamped to the grid.
    pub fn nearest(&self, x: f64, y: f64) -> (usize, usize) {
        let i = ((x - self.x0) / self.dx)
            .round()
            .clamp(0.0, (self.nx - 1) as f64);
        let j = ((y - self.y0) / self.dx)
            .round()
            .clamp(0.0, (self.ny - 1) as f64);
        (i as usize, j as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Cell {
    Background = 0,
    Cavity = 1,
    Conductor = 2,
}

/// Per-node material classification plus the indices behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialGrid {
    pub info: GridInfo,
    pub cells: Vec<Cell>,
    pub background_index: f64,
    pub cavity_index: f64,
}

impl MaterialGrid {
    pub fn cell(&self, i: usize, j: usize) -> Cell {
        self.cells[j * self.info.nx + i]
    }

    pub fn count(&self, kind: Cell) -> usize {
        self.cells.iter().filter(|&&c| c == kind).count()
    }

    /// Refractive index per node; conductor nodes report 0.
    pub fn index_map(&self) -> Vec<f64> {
        self.cells
            .iter()
            .map(|c| match c {
                Cell::Background => self.background_index,
                Cell::Cavity => self.cavity_index,
                Cell::Conductor => 0.0,
            })
            .collect()
    }

    pub fn min_index(&self) -> f64 {
        if self.cells.contains(&Cell::Cavity) {
            self.background_index.min(self.cavity_index)
        } else {
            self.background_index
        }
    }
}

/// Classify every grid node by cell-centre inclusion. Conductors win over
/// cavities where they touch.
pub fn rasterize(
    lattice: &CavityLattice,
    config: &SimulationConfig,
) -> Result<MaterialGrid, SimError> {
    let domain = config.domain.unwrap_or(lattice.bounding_box);
    let dx = config.grid_step;
    let info = GridInfo::covering(&domain, dx);
    for disk in &lattice.disks {
        let cells = 2.0 * disk.r / dx;
        if cells < MIN_CELLS_PER_DIAMETER {
            return Err(SimError::Resolution(format!(
                "disk of radius {:.3e} m spans {cells:.2} cells; at least {MIN_CELLS_PER_DIAMETER} required",
                disk.r
            )));
        }
    }
    let mut cells = vec![Cell::Background; info.len()];

    let span = |lo: f64, hi: f64, origin: f64, n: usize| -> (usize, usize) {
        let a = ((lo - origin) / dx).ceil().max(0.0) as usize;
        let b = ((hi - origin) / dx).floor().min((n - 1) as f64);
        if b < 0.0 {
            (1, 0)
        } else {
            (a, b as usize)
        }
    };

    // strip walls run through the whole domain along x so the channel ends
    // are buried in the absorbing layers
    for strip in &lattice.strips {
        let (i0, i1) = if strip.x0 <= lattice.bounding_box.x0 + 1e-12
            && strip.x1 >= lattice.bounding_box.x1 - 1e-12
        {
            (0, info.nx - 1)
        } else {
            span(strip.x0, strip.x1, info.x0, info.nx)
        };
        let (j0, j1) = span(strip.y0, strip.y1, info.y0, info.ny);
        for j in j0..=j1.min(info.ny - 1) {
            for i in i0..=i1.min(info.nx - 1) {
                if j0 <= j1 && i0 <= i1 {
                    cells[j * info.nx + i] = Cell::Conductor;
                }
            }
        }
    }

    let mut paint = |kind: DiskKind| {
        for disk in lattice.disks.iter().filter(|d| d.kind == kind) {
            let (i0, i1) = span(disk.x - disk.r, disk.x + disk.r, info.x0, info.nx);
            let (j0, j1) = span(disk.y - disk.r, disk.y + disk.r, info.y0, info.ny);
            // nodes exactly on the rim count as inside; disk centres often
            // coincide with nodes and rounding would otherwise decide
            let r2 = disk.r * disk.r * (1.0 + 1e-9);
            for j in j0..=j1 {
                let dy = info.y(j) - disk.y;
                for i in i0..=i1 {
                    let dxn = info.x(i) - disk.x;
                    if dxn * dxn + dy * dy <= r2 {
                        let cell = &mut cells[j * info.nx + i];
                        *cell = match kind {
                            DiskKind::Conductor => Cell::Conductor,
                            DiskKind::Cavity if *cell == Cell::Conductor => Cell::Conductor,
                            DiskKind::Cavity => Cell::Cavity,
                        };
                    }
                }
            }
        }
    };
    paint(DiskKind::Cavity);
    paint(DiskKind::Conductor);

    Ok(MaterialGrid {
        info,
        cells,
        background_index: config.background_index,
        cavity_index: config.cavity_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_model, Disk, LatticeParams};
    use std::f64::consts::PI;

    fn config(dx: f64) -> SimulationConfig {
        SimulationConfig {
            grid_step: dx,
            ..SimulationConfig::default()
        }
    }

    #[test]
    fn empty_lattice_is_uniform() {
        let lattice = CavityLattice::empty(Rect::new(0.0, 0.0, 5e-3, 3e-3));
        let grid = rasterize(&lattice, &config(1e-4)).unwrap();
        assert_eq!(grid.count(Cell::Background), grid.info.len());
        assert!(grid.index_map().iter().all(|&n| n == grid.background_index));
    }

    #[test]
    fn single_disk_area() {
        for (x, y) in [(0.0, 0.0), (0.3e-4, 0.17e-4), (0.5e-4, 0.5e-4)] {
            let mut lattice = CavityLattice::empty(Rect::new(-2e-3, -2e-3, 2e-3, 2e-3));
            lattice.disks.push(Disk {
                kind: DiskKind::Cavity,
                x,
                y,
                r: 0.5e-3,
            });
            let grid = rasterize(&lattice, &config(1e-4)).unwrap();
            let expected = PI * 25.0;
            let got = grid.count(Cell::Cavity) as f64;
            assert!(
                (got - expected).abs() / expected < 0.05,
                "{got} at ({x}, {y})"
            );
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let mut lattice = CavityLattice::empty(Rect::new(-2e-3, -2e-3, 2e-3, 2e-3));
        lattice.disks.push(Disk {
            kind: DiskKind::Conductor,
            x: 0.0,
            y: 0.0,
            r: 0.5e-3,
        });
        assert!(matches!(
            rasterize(&lattice, &config(0.25e-3)),
            Err(SimError::Resolution(_))
        ));
    }

    #[test]
    fn model_zero_walls() {
        let params = LatticeParams {
            d: 20e-3,
            ..LatticeParams::model(0).unwrap()
        };
        let lattice = build_model(&params).unwrap();
        let grid = rasterize(&lattice, &config(1e-4)).unwrap();
        let info = grid.info;
        // every column carries the walls, including the absorber regions
        for i in [0, info.nx / 2, info.nx - 1] {
            let conductor: Vec<usize> = (0..info.ny)
                .filter(|&j| grid.cell(i, j) == Cell::Conductor)
                .collect();
            assert!(!conductor.is_empty());
            let (_, mid) = info.nearest(0.0, 0.0);
            let below = conductor.iter().filter(|&&j| j < mid).max().unwrap();
            let above = conductor.iter().filter(|&&j| j > mid).min().unwrap();
            let gap = info.y(*above) - info.y(*below);
            assert!((gap - 9e-3).abs() <= info.dx + 1e-12, "gap {gap}");
        }
    }
}
