//! Analytic plane-wave scattering by a circular cylinder (TMz).
//!
//! The incident wave is `exp(i k x)` with time dependence `exp(-i w t)`.
//! Outside the cylinder the total field is
//! `sum_n i^n [J_n(k r) + a_n H_n(k r)] exp(i n phi)`.

use num_complex::Complex64;

use crate::bessel::{bessel_j_all, bessel_y_all, derivative};
use crate::material::C0;

use super::{config_error, Result, SimError};

const TERM_TOLERANCE: f64 = 1e-12;
/// Consecutive negligible terms required before truncating.
const QUIET_TERMS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderScatter {
    pub radius: f64,
    pub background_index: f64,
    /// Index of the cylinder; ignored for a conductor.
    pub cylinder_index: f64,
    pub frequency: f64,
    pub conductor: bool,
    pub max_order: usize,
}

impl CylinderScatter {
    pub fn conductor(radius: f64, background_index: f64, frequency: f64) -> Self {
        Self {
            radius,
            background_index,
            cylinder_index: 1.0,
            frequency,
            conductor: true,
            max_order: 200,
        }
    }

    pub fn dielectric(
        radius: f64,
        background_index: f64,
        cylinder_index: f64,
        frequency: f64,
    ) -> Self {
        Self {
            cylinder_index,
            conductor: false,
            ..Self::conductor(radius, background_index, frequency)
        }
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.frequency * self.background_index / C0
    }

    /// Scattering coefficients `a_0 ..= a_nmax`.
    pub fn coefficients(&self, nmax: usize) -> Vec<Complex64> {
        let x = self.wavenumber() * self.radius;
        let j = bessel_j_all(nmax + 1, x);
        let y = bessel_y_all(nmax + 1, x);
        let h: Vec<Complex64> = j
            .iter()
            .zip(&y)
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect();
        if self.conductor {
            return (0..=nmax).map(|n| -j[n] / h[n]).collect();
        }
        let m = self.cylinder_index / self.background_index;
        let jm = bessel_j_all(nmax + 1, m * x);
        (0..=nmax)
            .map(|n| {
                let djm = derivative(&jm, n);
                let num = m * djm * j[n] - jm[n] * derivative(&j, n);
                let den = jm[n] * derivative(&h, n) - h[n] * (m * djm);
                num / den
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let positive = |field: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config_error(field, format!("must be positive, got {v}")))
            }
        };
        positive("radius", self.radius)?;
        positive("background_index", self.background_index)?;
        positive("frequency", self.frequency)?;
        if !self.conductor {
            positive("cylinder_index", self.cylinder_index)?;
        }
        Ok(())
    }

    /// Total (`scattered == false`) or scattered field at points given
    /// relative to the cylinder axis. Points must lie outside the cylinder.
    pub fn field(&self, points: &[(f64, f64)], scattered: bool) -> Result<Vec<Complex64>> {
        self.validate()?;
        let k = self.wavenumber();
        let rho_max = points
            .iter()
            .map(|&(x, y)| x.hypot(y))
            .fold(0.0f64, f64::max);
        let order = |x: f64| (x + 10.0 * x.cbrt() + 20.0).ceil() as usize;
        let nmax = order(k * rho_max.max(self.radius)).min(self.max_order);
        let a = self.coefficients(nmax);
        let i_pow = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ];
        points
            .iter()
            .map(|&(px, py)| {
                let rho = px.hypot(py);
                if rho < self.radius * (1.0 - 1e-12) {
                    return Err(config_error(
                        "eval_points",
                        format!("point ({px:e}, {py:e}) lies inside the cylinder"),
                    ));
                }
                let phi = py.atan2(px);
                let kr = k * rho;
                let j = bessel_j_all(nmax, kr);
                let y = bessel_y_all(nmax, kr);
                let mut sum = Complex64::new(0.0, 0.0);
                // the sum itself vanishes on a conductor surface, so terms are
                // judged against the largest one seen
                let mut scale: f64 = 0.0;
                let mut quiet = 0;
                for n in 0..=nmax {
                    let h = Complex64::new(j[n], y[n]);
                    let radial = if scattered { a[n] * h } else { j[n] + a[n] * h };
                    let weight = if n == 0 { 1.0 } else { 2.0 };
                    let term = i_pow[n % 4] * radial * (weight * (n as f64 * phi).cos());
                    if !(term.re.is_finite() && term.im.is_finite()) {
                        return Err(SimError::SeriesConvergence { order: n });
                    }
                    sum += term;
                    // the angular factor can vanish by accident, so judge by
                    // the radial magnitude
                    let size = radial.norm() * weight;
                    scale = scale.max(size);
                    if size <= TERM_TOLERANCE * scale {
                        quiet += 1;
                        if quiet >= QUIET_TERMS {
                            return Ok(sum);
                        }
                    } else {
                        quiet = 0;
                    }
                }
                Err(SimError::SeriesConvergence { order: nmax })
            })
            .collect()
    }
}

/// Total field of a unit plane wave `exp(i k x)` around a cylinder of
/// `radius` centred on the origin.
pub fn analytic_cylinder_scatter(
    radius: f64,
    background_index: f64,
    frequency: f64,
    conductor: bool,
    eval_points: &[(f64, f64)],
) -> Result<Vec<Complex64>> {
    let model = if conductor {
        CylinderScatter::conductor(radius, background_index, frequency)
    } else {
        CylinderScatter::dielectric(radius, background_index, 1.0, frequency)
    };
    model.field(eval_points, false)
}
