//! Closed-form design math for a dielectric-coated ground plane with a
//! lattice of air cavities.
//!
//! The porous dielectric is homogenized into an effective permittivity, which
//! together with the layer thickness and the ground-plane skin depth fixes the
//! inductive surface reactance seen by a TM surface wave. The reactance is
//! always handled as a positive magnitude; it is understood to be inductive
//! (`+jX`).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Permeability of free space (H/m).
pub const MU0: f64 = 4.0e-7 * PI;
/// Speed of light in vacuum (m/s).
pub const C0: f64 = 299_792_458.0;
/// Wave impedance of free space (ohms).
pub const ETA0: f64 = MU0 * C0;

pub const COPPER_CONDUCTIVITY: f64 = 59.6e6;
pub const GALINSTAN_CONDUCTIVITY: f64 = 3.46e6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaterialError {
    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error(
        "target reactance {target} ohm is not reachable with a positive thickness \
         (skin-depth term alone gives {floor} ohm)"
    )]
    InfeasibleTarget { target: f64, floor: f64 },
    #[error("effective permittivity is 1: the dielectric contributes no reactance")]
    Singular,
}

pub type Result<T> = std::result::Result<T, MaterialError>;

fn domain(name: &'static str, value: f64, expected: &'static str) -> MaterialError {
    MaterialError::Domain {
        name,
        value,
        expected,
    }
}

/// Material and geometry description of one surface design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceSpec {
    /// Relative permittivity of the solid dielectric.
    pub eps_r: f64,
    /// Porosity as a fraction in `[0, 1)`.
    pub rho: f64,
    /// Dielectric thickness (m).
    pub h: f64,
    /// Ground-plane conductivity (S/m).
    pub sigma_ground: f64,
    /// Fluid-metal conductivity (S/m).
    pub sigma_fill: f64,
    /// Operating frequency (Hz).
    pub f: f64,
    /// Target surface reactance magnitude (ohms).
    pub x_target: f64,
}

impl Default for SurfaceSpec {
    fn default() -> Self {
        Self {
            eps_r: 2.1,
            rho: 0.0,
            h: 2.85e-3,
            sigma_ground: COPPER_CONDUCTIVITY,
            sigma_fill: GALINSTAN_CONDUCTIVITY,
            f: 26e9,
            x_target: 270.0,
        }
    }
}

impl SurfaceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_r >= 1.0) {
            return Err(domain("eps_r", self.eps_r, ">= 1"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(domain("rho", self.rho, "[0, 1)"));
        }
        // h = 0 is kept valid so the skin-depth floor can be evaluated
        if !(self.h >= 0.0) {
            return Err(domain("h", self.h, ">= 0"));
        }
        if !(self.sigma_ground > 0.0) {
            return Err(domain("sigma_ground", self.sigma_ground, "> 0"));
        }
        if !(self.sigma_fill > 0.0) {
            return Err(domain("sigma_fill", self.sigma_fill, "> 0"));
        }
        if !(self.f > 0.0) {
            return Err(domain("f", self.f, "> 0"));
        }
        if !(self.x_target > 0.0) {
            return Err(domain("x_target", self.x_target, "> 0"));
        }
        Ok(())
    }

    /// Copy of this spec with a different porosity.
    pub fn with_porosity(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_thickness(mut self, h: f64) -> Self {
        self.h = h;
        self
    }
}

/// Quantities derived from a [`SurfaceSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedSurface {
    pub eps_eff: f64,
    /// Skin depth of the ground metal (m).
    pub delta: f64,
    /// Inductive surface reactance magnitude (ohms).
    pub x_s: f64,
    /// Effective refractive index of the bound TM wave.
    pub n_eff: f64,
}

/// Homogenized permittivity of a dielectric of permittivity `eps_r` perforated
/// with air cavities at porosity `rho`.
pub fn effective_permittivity(eps_r: f64, rho: f64) -> Result<f64> {
    if !(eps_r >= 1.0) {
        return Err(domain("eps_r", eps_r, ">= 1"));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(domain("rho", rho, "[0, 1)"));
    }
    let num = eps_r * (1.0 + 3.0 * eps_r + 3.0 * rho * (1.0 - eps_r));
    let den = 1.0 + 3.0 * eps_r + rho * (eps_r - 1.0);
    Ok(num / den)
}

/// Good-conductor skin depth `1/sqrt(pi f mu0 sigma)`.
pub fn skin_depth(sigma: f64, f: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(domain("sigma", sigma, "> 0"));
    }
    if !(f > 0.0) {
        return Err(domain("f", f, "> 0"));
    }
    Ok(1.0 / (PI * f * MU0 * sigma).sqrt())
}

/// Surface reactance of a grounded dielectric slab of thickness `h`.
pub fn surface_reactance(eps_eff: f64, h: f64, f: f64, delta: f64) -> Result<f64> {
    if !(eps_eff >= 1.0) {
        return Err(domain("eps_eff", eps_eff, ">= 1"));
    }
    if !(h >= 0.0) {
        return Err(domain("h", h, ">= 0"));
    }
    if !(delta >= 0.0) {
        return Err(domain("delta", delta, ">= 0"));
    }
    if !(f > 0.0) {
        return Err(domain("f", f, "> 0"));
    }
    Ok(2.0 * PI * f * MU0 * ((eps_eff - 1.0) / eps_eff * h + delta / 2.0))
}

/// Reactance contributed by the skin-depth term alone (zero thickness).
pub fn skin_reactance(f: f64, delta: f64) -> f64 {
    PI * f * MU0 * delta
}

/// Dielectric thickness that realizes `x_target` ohms.
///
/// The reactance is affine in `h`, so this inverts it directly. A target
/// exactly equal to the skin-depth floor yields `h = 0`.
pub fn solve_thickness(eps_eff: f64, f: f64, delta: f64, x_target: f64) -> Result<f64> {
    if !(eps_eff >= 1.0) {
        return Err(domain("eps_eff", eps_eff, ">= 1"));
    }
    if !(f > 0.0) {
        return Err(domain("f", f, "> 0"));
    }
    if !(delta >= 0.0) {
        return Err(domain("delta", delta, ">= 0"));
    }
    if !(x_target > 0.0) {
        return Err(domain("x_target", x_target, "> 0"));
    }
    if eps_eff == 1.0 {
        return Err(MaterialError::Singular);
    }
    let omega_mu = 2.0 * PI * f * MU0;
    let floor = omega_mu * delta / 2.0;
    if x_target < floor {
        return Err(MaterialError::InfeasibleTarget {
            target: x_target,
            floor,
        });
    }
    let h = ((x_target / omega_mu - delta / 2.0) * eps_eff / (eps_eff - 1.0)).max(0.0);
    let residual = surface_reactance(eps_eff, h, f, delta)? - x_target;
    debug_assert!(residual.abs() < 1e-2, "thickness residual {residual} ohm");
    Ok(h)
}

/// Effective index of a TM surface wave over a reactive plane,
/// `sqrt(1 + (x_s/eta0)^2)`.
pub fn effective_index(x_s: f64) -> Result<f64> {
    if !(x_s >= 0.0) {
        return Err(domain("x_s", x_s, ">= 0"));
    }
    Ok((x_s / ETA0).hypot(1.0))
}

/// Full evaluation chain for one surface design, with the skin depth taken
/// from the ground-plane conductivity.
pub fn derive_surface(spec: &SurfaceSpec) -> Result<DerivedSurface> {
    spec.validate()?;
    let eps_eff = effective_permittivity(spec.eps_r, spec.rho)?;
    let delta = skin_depth(spec.sigma_ground, spec.f)?;
    let x_s = surface_reactance(eps_eff, spec.h, spec.f, delta)?;
    let n_eff = effective_index(x_s)?;
    Ok(DerivedSurface {
        eps_eff,
        delta,
        x_s,
        n_eff,
    })
}

/// Thickness that matches `spec.x_target` at the spec's porosity.
pub fn matched_thickness(spec: &SurfaceSpec) -> Result<f64> {
    let eps_eff = effective_permittivity(spec.eps_r, spec.rho)?;
    let delta = skin_depth(spec.sigma_ground, spec.f)?;
    solve_thickness(eps_eff, spec.f, delta, spec.x_target)
}

/// Background index the 2D simulator uses for a surface: the reactance of the
/// solid (unperforated) dielectric at thickness `h`, mapped to an index.
pub fn solid_background_index(spec: &SurfaceSpec, h: f64) -> Result<f64> {
    let delta = skin_depth(spec.sigma_ground, spec.f)?;
    let x_s = surface_reactance(spec.eps_r, h, spec.f, delta)?;
    effective_index(x_s)
}
