//! Cavity and wall layouts for the porous channel models.
//!
//! Frame: the channel runs along `+x` starting at the entrance `x = 0` and
//! has its centerline on `y = 0`. Walls and cavities are continued for
//! `lead` metres beyond both ends of the channel so that the simulator can
//! bury the channel ends inside its absorbing layers.

use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("cavities overlap: pitch {pitch} m is below the disk diameter {diameter} m")]
    Overlap { pitch: f64, diameter: f64 },
    #[error("channel width {w_c} m is narrower than a cavity diameter {diameter} m")]
    ChannelTooNarrow { w_c: f64, diameter: f64 },
    #[error("{rows} cavity rows at pitch {pitch} m do not fit inside a {w_c} m channel")]
    RowsDoNotFit { rows: usize, pitch: f64, w_c: f64 },
    #[error("unknown model id {0} (expected 0..=5)")]
    UnknownModel(u8),
    #[error("degenerate region {0:?}")]
    DegenerateRegion(Rect),
    #[error("region {region:?} is not inside the bounding box {bbox:?}")]
    RegionOutside { region: Rect, bbox: Rect },
    #[error("geometry file line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]` in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x0 >= self.x0 - EPS
            && other.x1 <= self.x1 + EPS
            && other.y0 >= self.y0 - EPS
            && other.y1 <= self.y1 + EPS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiskKind {
    /// Air column through the dielectric.
    Cavity,
    /// Cavity filled with fluid metal.
    Conductor,
}

impl DiskKind {
    fn as_str(self) -> &'static str {
        match self {
            DiskKind::Cavity => "cavity",
            DiskKind::Conductor => "conductor",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub kind: DiskKind,
    pub x: f64,
    pub y: f64,
    pub r: f64,
}

impl Disk {
    pub fn bounds(&self) -> Rect {
        Rect::new(
            self.x - self.r,
            self.y - self.r,
            self.x + self.r,
            self.y + self.r,
        )
    }

    /// Exact area of this disk inside `rect`.
    pub fn area_in(&self, rect: &Rect) -> f64 {
        let f = |u: f64, v: f64| quadrant_area(u - self.x, v - self.y, self.r);
        (f(rect.x1, rect.y1) - f(rect.x0, rect.y1) - f(rect.x1, rect.y0) + f(rect.x0, rect.y0))
            .max(0.0)
    }

    fn intersects_rect(&self, rect: &Rect) -> bool {
        let dx = (rect.x0 - self.x).max(0.0).max(self.x - rect.x1);
        let dy = (rect.y0 - self.y).max(0.0).max(self.y - rect.y1);
        dx * dx + dy * dy < (self.r * self.r) * (1.0 - 1e-9)
    }
}

/// How the two channel walls are rendered.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "style", rename_all = "snake_case", deny_unknown_fields)]
pub enum WallStyle {
    /// Two continuous conducting strips.
    Strip,
    /// Rows of conductor-filled disks of the lattice radius at `pitch`.
    Disks { pitch: f64 },
    /// No walls (open surface).
    None,
}

/// Parameters of one porosity pattern. Lengths in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeParams {
    /// 0 has walls only; 1..=4 are aligned lattices; 5 is interleaved.
    pub model_id: u8,
    /// Longitudinal separation (aligned) or nearest-neighbour distance
    /// (interleaved).
    pub w_l: f64,
    /// Horizontal separation of an aligned lattice.
    pub w_h: f64,
    pub r: f64,
    pub w_c: f64,
    /// Channel length, measured from the entrance.
    pub d: f64,
    pub interleaved: bool,
    /// Extension of walls and cavities beyond both channel ends. Channel
    /// runs need it to reach through the end absorbers.
    pub lead: f64,
    /// Depth of cavity rows generated outside the walls; 0 disables them.
    pub exterior_margin: f64,
    /// Clear space between the outermost geometry and the bounding box.
    pub pad: f64,
    /// Number of cavity rows inside the channel; `None` fits as many as the
    /// half-pitch wall clearance allows.
    pub interior_rows: Option<usize>,
    pub walls: WallStyle,
    /// Thickness of strip walls.
    pub wall_thickness: f64,
    /// x of the first cavity column; `None` puts it half a pitch past the
    /// entrance.
    pub phase: Option<f64>,
}

impl Default for LatticeParams {
    fn default() -> Self {
        Self::model(0).expect("model 0 exists")
    }
}

impl LatticeParams {
    /// Layout of one of the six reference models with the desk-scale channel
    /// length of 300 mm. The interleaved model gets eight interior rows so
    /// the centerline runs between rows, as it does in the aligned models.
    pub fn model(model_id: u8) -> Result<Self> {
        let (w_l, w_h, interleaved) = match model_id {
            0 => (0.0, 0.0, false),
            1 => (5.0e-3, 2.0e-3, false),
            2 => (10.0e-3 / 3.0, 2.0e-3, false),
            3 => (2.5e-3, 2.0e-3, false),
            4 => (2.0e-3, 2.0e-3, false),
            5 => (SQRT_2 * 1e-3, 2.0e-3, true),
            other => return Err(GeometryError::UnknownModel(other)),
        };
        Ok(Self {
            model_id,
            w_l,
            w_h,
            r: 0.5e-3,
            w_c: 9.0e-3,
            d: 300e-3,
            interleaved,
            lead: 45e-3,
            exterior_margin: 0.0,
            pad: 2.5e-3,
            interior_rows: interleaved.then_some(8),
            walls: WallStyle::Strip,
            wall_thickness: 1.0e-3,
            phase: None,
        })
    }

    pub fn has_cavities(&self) -> bool {
        self.model_id != 0
    }

    /// Nominal porosity of the pattern (0 for the wall-only model).
    pub fn porosity(&self) -> Result<f64> {
        if !self.has_cavities() {
            return Ok(0.0);
        }
        porosity_of(self.w_l, self.w_h, self.r, self.interleaved)
    }

    /// Spacing between cavity columns within one row.
    fn column_pitch(&self) -> f64 {
        if self.interleaved {
            self.w_l * SQRT_2
        } else {
            self.w_l
        }
    }

    /// Spacing between cavity rows.
    pub fn row_pitch(&self) -> f64 {
        if self.interleaved {
            self.w_l / SQRT_2
        } else {
            self.w_h
        }
    }

    fn wall_extent(&self) -> f64 {
        match self.walls {
            WallStyle::Strip => self.wall_thickness,
            WallStyle::Disks { .. } => 2.0 * self.r,
            WallStyle::None => 0.0,
        }
    }

    pub fn bounding_box(&self) -> Rect {
        let half = self.w_c / 2.0 + self.wall_extent() + self.exterior_margin + self.pad;
        Rect::new(-self.lead, -half, self.d + self.lead, half)
    }

    /// Channel interior between the walls, over the channel length.
    pub fn channel_interior(&self) -> Rect {
        Rect::new(0.0, -self.w_c / 2.0, self.d, self.w_c / 2.0)
    }

    fn validate(&self) -> Result<()> {
        let positive = |name, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(GeometryError::Domain {
                    name,
                    value,
                    expected: "> 0",
                })
            }
        };
        let non_negative = |name, value: f64| {
            if value >= 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(GeometryError::Domain {
                    name,
                    value,
                    expected: ">= 0",
                })
            }
        };
        positive("r", self.r)?;
        positive("w_c", self.w_c)?;
        positive("d", self.d)?;
        non_negative("lead", self.lead)?;
        non_negative("exterior_margin", self.exterior_margin)?;
        non_negative("pad", self.pad)?;
        if self.model_id > 5 {
            return Err(GeometryError::UnknownModel(self.model_id));
        }
        if self.w_c < 2.0 * self.r {
            return Err(GeometryError::ChannelTooNarrow {
                w_c: self.w_c,
                diameter: 2.0 * self.r,
            });
        }
        match self.walls {
            WallStyle::Strip => positive("wall_thickness", self.wall_thickness)?,
            WallStyle::Disks { pitch } => check_pitch(pitch, self.r)?,
            WallStyle::None => {}
        }
        if self.has_cavities() {
            porosity_of(self.w_l, self.w_h, self.r, self.interleaved)?;
        }
        Ok(())
    }

    fn interior_row_positions(&self) -> Result<Vec<f64>> {
        let pitch = self.row_pitch();
        let half = self.w_c / 2.0;
        let rows = match self.interior_rows {
            Some(n) => n,
            None => ((self.w_c + EPS) / pitch).floor() as usize,
        };
        let positions: Vec<f64> = (0..rows)
            .map(|i| (i as f64 - (rows as f64 - 1.0) / 2.0) * pitch)
            .collect();
        if positions
            .iter()
            .any(|y| y.abs() + self.r > half * (1.0 + 1e-9))
        {
            return Err(GeometryError::RowsDoNotFit {
                rows,
                pitch,
                w_c: self.w_c,
            });
        }
        Ok(positions)
    }

    fn exterior_row_positions(&self) -> Vec<f64> {
        if self.exterior_margin <= 0.0 {
            return Vec::new();
        }
        let pitch = self.row_pitch();
        let start = self.w_c / 2.0 + self.wall_extent() + pitch / 2.0;
        let limit = self.w_c / 2.0 + self.wall_extent() + self.exterior_margin;
        let mut out = Vec::new();
        let mut y = start;
        while y + pitch / 2.0 <= limit + EPS {
            out.push(y);
            out.push(-y);
            y += pitch;
        }
        out
    }
}

fn check_pitch(pitch: f64, r: f64) -> Result<()> {
    if !(pitch > 0.0) {
        return Err(GeometryError::Domain {
            name: "pitch",
            value: pitch,
            expected: "> 0",
        });
    }
    if pitch < 2.0 * r * (1.0 - 1e-9) {
        return Err(GeometryError::Overlap {
            pitch,
            diameter: 2.0 * r,
        });
    }
    Ok(())
}

/// Porosity of an infinite lattice: cavity top area over measured-unit area.
///
/// The aligned unit is a `w_l x w_h` rectangle. The interleaved lattice is a
/// 45-degree rotated square lattice with nearest-neighbour distance `w_l`,
/// whose unit cell has area `w_l^2`; `w_h` is ignored for it.
pub fn porosity_of(w_l: f64, w_h: f64, r: f64, interleaved: bool) -> Result<f64> {
    if !(r > 0.0) {
        return Err(GeometryError::Domain {
            name: "r",
            value: r,
            expected: "> 0",
        });
    }
    check_pitch(w_l, r)?;
    let cell = if interleaved {
        w_l * w_l
    } else {
        check_pitch(w_h, r)?;
        w_l * w_h
    };
    Ok(PI * r * r / cell)
}

/// Explicit layout: wall strips, conductor disks and cavity disks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavityLattice {
    pub strips: Vec<Rect>,
    pub disks: Vec<Disk>,
    pub bounding_box: Rect,
}

impl CavityLattice {
    /// Nothing but the bounding box.
    pub fn empty(bounding_box: Rect) -> Self {
        Self {
            strips: Vec::new(),
            disks: Vec::new(),
            bounding_box,
        }
    }

    pub fn cavities(&self) -> impl Iterator<Item = &Disk> {
        self.disks.iter().filter(|d| d.kind == DiskKind::Cavity)
    }

    pub fn cavity_count(&self) -> usize {
        self.cavities().count()
    }

    /// Same walls and bounding box with the cavities removed.
    pub fn without_cavities(&self) -> Self {
        Self {
            strips: self.strips.clone(),
            disks: self
                .disks
                .iter()
                .filter(|d| d.kind != DiskKind::Cavity)
                .copied()
                .collect(),
            bounding_box: self.bounding_box,
        }
    }

    /// Serialize to the plain-text geometry format: one element per line,
    /// `bbox`/`strip` followed by `x0 y0 x1 y1`, disks as `kind x y r`.
    pub fn to_geometry_text(&self) -> String {
        let mut out = String::from("# porosurf geometry v1 (metres)\n");
        let b = self.bounding_box;
        let _ = writeln!(
            out,
            "bbox {:.8e} {:.8e} {:.8e} {:.8e}",
            b.x0, b.y0, b.x1, b.y1
        );
        for s in &self.strips {
            let _ = writeln!(
                out,
                "strip {:.8e} {:.8e} {:.8e} {:.8e}",
                s.x0, s.y0, s.x1, s.y1
            );
        }
        for d in &self.disks {
            let _ = writeln!(
                out,
                "{} {:.8e} {:.8e} {:.8e}",
                d.kind.as_str(),
                d.x,
                d.y,
                d.r
            );
        }
        out
    }

    pub fn from_geometry_text(text: &str) -> Result<Self> {
        let mut bbox = None;
        let mut strips = Vec::new();
        let mut disks = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut fields = content.split_whitespace();
            let kind = fields.next().unwrap_or_default();
            let values = fields
                .map(|f| {
                    f64::from_str(f).map_err(|e| GeometryError::Parse {
                        line,
                        message: format!("bad number {f:?}: {e}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            let expect = |n: usize| {
                if values.len() == n {
                    Ok(())
                } else {
                    Err(GeometryError::Parse {
                        line,
                        message: format!("{kind} takes {n} numbers, found {}", values.len()),
                    })
                }
            };
            match kind {
                "bbox" | "strip" => {
                    expect(4)?;
                    let rect = Rect::new(values[0], values[1], values[2], values[3]);
                    if kind == "bbox" {
                        bbox = Some(rect);
                    } else {
                        strips.push(rect);
                    }
                }
                "cavity" | "conductor" => {
                    expect(3)?;
                    let kind = if kind == "cavity" {
                        DiskKind::Cavity
                    } else {
                        DiskKind::Conductor
                    };
                    disks.push(Disk {
                        kind,
                        x: values[0],
                        y: values[1],
                        r: values[2],
                    });
                }
                other => {
                    return Err(GeometryError::Parse {
                        line,
                        message: format!("unknown element {other:?}"),
                    })
                }
            }
        }
        let bounding_box = bbox.ok_or(GeometryError::Parse {
            line: 0,
            message: "missing bbox line".into(),
        })?;
        Ok(Self {
            strips,
            disks,
            bounding_box,
        })
    }
}

/// Generate the layout described by `params`. Deterministic.
pub fn build_model(params: &LatticeParams) -> Result<CavityLattice> {
    params.validate()?;
    let bbox = params.bounding_box();
    let half = params.w_c / 2.0;
    let (x_lo, x_hi) = (-params.lead, params.d + params.lead);

    let mut strips = Vec::new();
    let mut disks = Vec::new();
    match params.walls {
        WallStyle::Strip => {
            let t = params.wall_thickness;
            strips.push(Rect::new(x_lo, -half - t, x_hi, -half));
            strips.push(Rect::new(x_lo, half, x_hi, half + t));
        }
        WallStyle::Disks { pitch } => {
            for x in columns(x_lo, x_hi, pitch / 2.0, pitch, params.r) {
                for y in [-(half + params.r), half + params.r] {
                    disks.push(Disk {
                        kind: DiskKind::Conductor,
                        x,
                        y,
                        r: params.r,
                    });
                }
            }
        }
        WallStyle::None => {}
    }

    if params.has_cavities() {
        let pitch = params.column_pitch();
        let phase = params.phase.unwrap_or(pitch / 2.0);
        let interior = params.interior_row_positions()?;
        let rows = interior
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                // signed index keeps an odd row count mirror-symmetric
                let m = i as i64 - (interior.len() as i64 - 1) / 2;
                (y, m.rem_euclid(2) == 1)
            })
            .chain(params.exterior_row_positions().into_iter().map(|y| {
                let m = (y / params.row_pitch()).round() as i64;
                (y, m.rem_euclid(2) == 1)
            }));
        for (y, odd) in rows {
            let shift = if params.interleaved && odd {
                pitch / 2.0
            } else {
                0.0
            };
            for x in columns(x_lo, x_hi, phase + shift, pitch, params.r) {
                disks.push(Disk {
                    kind: DiskKind::Cavity,
                    x,
                    y,
                    r: params.r,
                });
            }
        }
    }

    let lattice = CavityLattice {
        strips,
        disks,
        bounding_box: bbox,
    };
    debug_assert!(lattice
        .disks
        .iter()
        .all(|d| bbox.contains_rect(&d.bounds())));
    debug_assert!(lattice
        .cavities()
        .all(|d| lattice.strips.iter().all(|s| !d.intersects_rect(s))));
    Ok(lattice)
}

/// Column centres `phase + j*pitch` whose disks fit in `[lo, hi]`.
fn columns(lo: f64, hi: f64, phase: f64, pitch: f64, r: f64) -> impl Iterator<Item = f64> {
    let j0 = ((lo + r - phase) / pitch - EPS).ceil() as i64;
    let j1 = ((hi - r - phase) / pitch + EPS).floor() as i64;
    (j0..=j1).map(move |j| phase + j as f64 * pitch)
}

/// Cavity area fraction of `region`, using exact disk-rectangle intersection.
pub fn lattice_porosity(lattice: &CavityLattice, region: &Rect) -> Result<f64> {
    if !(region.width() > 0.0 && region.height() > 0.0) {
        return Err(GeometryError::DegenerateRegion(*region));
    }
    if !lattice.bounding_box.contains_rect(region) {
        return Err(GeometryError::RegionOutside {
            region: *region,
            bbox: lattice.bounding_box,
        });
    }
    let covered: f64 = lattice.cavities().map(|d| d.area_in(region)).sum();
    Ok(covered / region.area())
}

/// Area of the disk of radius `r` centred at the origin that lies in
/// `{x <= u, y <= v}`.
fn quadrant_area(u: f64, v: f64, r: f64) -> f64 {
    let u = u.clamp(-r, r);
    // integral of sqrt(r^2 - t^2) over [a, b]
    let chord = |a: f64, b: f64| -> f64 {
        let g = |t: f64| {
            let t = t.clamp(-r, r);
            0.5 * (t * (r * r - t * t).max(0.0).sqrt() + r * r * (t / r).asin())
        };
        if b > a {
            g(b) - g(a)
        } else {
            0.0
        }
    };
    if v >= r {
        return 2.0 * chord(-r, u);
    }
    if v <= -r {
        return 0.0;
    }
    let c = (r * r - v * v).sqrt();
    let flat = |a: f64, b: f64| if b > a { b - a } else { 0.0 };
    if v >= 0.0 {
        // full chord for |t| >= c, chord clipped at v inside
        2.0 * chord(-r, u.min(-c))
            + chord(-c, u.min(c))
            + v * flat(-c, u.min(c))
            + 2.0 * chord(c, u)
    } else {
        chord(-c, u.min(c)) + v * flat(-c, u.min(c))
    }
}
