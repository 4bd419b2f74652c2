//! Field metrics: centerline profile, local mean, fluctuation, path loss and
//! band edges.
//!
//! All levels are `20 log10(|E| / reference)`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::Rect;
use crate::sim::export::num;
use crate::sim::FieldRecord;

/// Local-mean window in effective wavelengths.
pub const DEFAULT_WINDOW_WAVELENGTHS: f64 = 2.0;
/// Excluded length at each channel end.
pub const DEFAULT_MARGIN: f64 = 50e-3;
/// Shortest span, in wavelengths, accepted by [`path_loss_fit`].
pub const MIN_FIT_WAVELENGTHS: f64 = 5.0;
pub const MIN_SPECTRUM_POINTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("record has no amplitude map")]
    NoAmplitudeMap,
    #[error("analysis span is empty: {0}")]
    EmptySpan(String),
    #[error("local-mean window of {samples} samples is too small (need at least 3)")]
    WindowTooSmall { samples: usize },
    #[error("profile has no local mean")]
    MissingLocalMean,
    #[error("path-loss fit is degenerate: {0}")]
    DegenerateFit(String),
    #[error("spectrum has no interior peak")]
    NoPeak,
    #[error("spectrum needs at least {MIN_SPECTRUM_POINTS} points, got {0}")]
    TooFewPoints(usize),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

/// Field level sampled along the channel centerline.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterlineProfile {
    /// Uniformly spaced, strictly increasing positions (m).
    pub x: Vec<f64>,
    pub p_db: Vec<f64>,
    /// Empty until [`CenterlineProfile::with_local_mean`] is applied.
    pub local_mean_db: Vec<f64>,
    /// Window (m) that produced `local_mean_db`.
    pub local_mean_window: Option<f64>,
    pub analysis_span: (f64, f64),
    /// Amplitude that maps to 0 dB.
    pub reference: f64,
}

impl CenterlineProfile {
    /// Profile from sampled amplitudes on a uniform grid.
    pub fn from_amplitudes(x: Vec<f64>, amplitudes: &[f64], reference: f64) -> Result<Self> {
        if x.is_empty() || x.len() != amplitudes.len() {
            return Err(AnalysisError::EmptySpan(format!(
                "{} positions for {} samples",
                x.len(),
                amplitudes.len()
            )));
        }
        if !(reference > 0.0) {
            return Err(AnalysisError::Invalid(format!(
                "reference amplitude {reference}"
            )));
        }
        let p_db = amplitudes
            .iter()
            .map(|a| 20.0 * (a / reference).log10())
            .collect();
        Self::from_db(x, p_db, reference)
    }

    pub fn from_db(x: Vec<f64>, p_db: Vec<f64>, reference: f64) -> Result<Self> {
        if x.is_empty() || x.len() != p_db.len() {
            return Err(AnalysisError::EmptySpan(format!(
                "{} positions for {} samples",
                x.len(),
                p_db.len()
            )));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(AnalysisError::Invalid("positions must increase".into()));
        }
        Ok(Self {
            analysis_span: (x[0], x[x.len() - 1]),
            x,
            p_db,
            local_mean_db: Vec::new(),
            local_mean_window: None,
            reference,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Sample spacing (0 for a single sample).
    pub fn spacing(&self) -> f64 {
        if self.x.len() < 2 {
            0.0
        } else {
            (self.x[self.x.len() - 1] - self.x[0]) / (self.x.len() - 1) as f64
        }
    }

    pub fn with_local_mean(mut self, window: f64) -> Result<Self> {
        self.local_mean_db = local_mean(&self, window)?;
        self.local_mean_window = Some(window);
        Ok(self)
    }

    pub fn residuals(&self) -> Result<Vec<f64>> {
        if self.local_mean_db.len() != self.p_db.len() {
            return Err(AnalysisError::MissingLocalMean);
        }
        Ok(self
            .p_db
            .iter()
            .zip(&self.local_mean_db)
            .map(|(p, m)| p - m)
            .collect())
    }

    /// `x_m,p_db,local_mean_db` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x_m,p_db,local_mean_db\n");
        for (k, (&x, &p)) in self.x.iter().zip(&self.p_db).enumerate() {
            let mean = self.local_mean_db.get(k).map_or(String::new(), |&m| num(m));
            let _ = writeln!(out, "{},{},{}", num(x), num(p), mean);
        }
        out
    }
}

/// Sample the amplitude map along the middle of `channel` at grid
/// resolution, leaving out `margins` at both ends.
pub fn extract_centerline(
    record: &FieldRecord,
    channel: &Rect,
    margins: f64,
    reference: f64,
) -> Result<CenterlineProfile> {
    let map = record
        .amplitude_map
        .as_ref()
        .ok_or(AnalysisError::NoAmplitudeMap)?;
    let g = &record.grid;
    let (start, end) = (channel.x0 + margins, channel.x1 - margins);
    if !(margins >= 0.0) || !(end > start) {
        return Err(AnalysisError::EmptySpan(format!(
            "margins {margins:.3e} m leave nothing of a {:.3e} m channel",
            channel.width()
        )));
    }
    let y = 0.5 * (channel.y0 + channel.y1);
    let fy = ((y - g.y0) / g.dx).clamp(0.0, (g.ny - 1) as f64);
    let j = (fy.floor() as usize).min(g.ny.saturating_sub(2));
    let ty = fy - j as f64;
    let tol = 1e-9 * g.dx;
    let i0 = ((start - g.x0 - tol) / g.dx).ceil().max(0.0) as usize;
    let i1 = (((end - g.x0 + tol) / g.dx).floor() as usize).min(g.nx - 1);
    if i1 < i0 {
        return Err(AnalysisError::EmptySpan(
            "no grid column inside the span".into(),
        ));
    }
    let (x, amps): (Vec<f64>, Vec<f64>) = (i0..=i1)
        .map(|i| {
            let a = map[j * g.nx + i] * (1.0 - ty) + map[(j + 1).min(g.ny - 1) * g.nx + i] * ty;
            (g.x(i), a)
        })
        .unzip();
    CenterlineProfile::from_amplitudes(x, &amps, reference)
}

/// Centred moving average of `p_db` over `window` metres.
///
/// A window of `n` sample intervals averages `n` samples when `n` is odd and
/// `n + 1` samples with half-weight ends when `n` is even, so a sinusoid whose
/// period equals the window averages out exactly. Near the ends the window
/// shrinks symmetrically to fit.
pub fn local_mean(profile: &CenterlineProfile, window: f64) -> Result<Vec<f64>> {
    let n = profile.len();
    if n == 0 {
        return Err(AnalysisError::EmptySpan("profile is empty".into()));
    }
    let dx = profile.spacing();
    let intervals = if dx > 0.0 {
        (window / dx).round() as usize
    } else {
        0
    };
    let samples = intervals + (intervals + 1) % 2;
    if !(window > 0.0) || intervals < 3 {
        return Err(AnalysisError::WindowTooSmall { samples });
    }
    let half = intervals / 2;
    let even = intervals % 2 == 0;
    let p = &profile.p_db;
    // prefix sums keep this linear in the profile length
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in p {
        prefix.push(prefix.last().unwrap() + v);
    }
    let sum = |a: usize, b: usize| prefix[b + 1] - prefix[a];
    Ok((0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            if h == half && even {
                let inner = if h > 0 {
                    sum(i - h + 1, i + h - 1)
                } else {
                    0.0
                };
                (inner + 0.5 * (p[i - h] + p[i + h])) / (2 * h) as f64
            } else {
                sum(i - h, i + h) / (2 * h + 1) as f64
            }
        })
        .collect())
}

/// Population standard deviation of the profile about its local mean.
pub fn fluctuation_sd(profile: &CenterlineProfile) -> Result<f64> {
    if profile.is_empty() {
        return Err(AnalysisError::EmptySpan("profile is empty".into()));
    }
    let r = profile.residuals()?;
    let n = r.len() as f64;
    Ok((r.iter().map(|v| v * v).sum::<f64>() / n).sqrt())
}

/// Least-squares slope of the local mean, returned as loss (dB/m, positive
/// for decay). The span must cover at least [`MIN_FIT_WAVELENGTHS`] of
/// `wavelength`. Samples within half a window of either end, where the
/// averaging window is truncated, are left out when enough span remains.
pub fn path_loss_fit(profile: &CenterlineProfile, wavelength: f64) -> Result<f64> {
    if profile.local_mean_db.len() != profile.len() {
        return Err(AnalysisError::MissingLocalMean);
    }
    let n = profile.len();
    let span_of = |a: usize, b: usize| {
        if b > a {
            profile.x[b] - profile.x[a]
        } else {
            0.0
        }
    };
    let min_span = MIN_FIT_WAVELENGTHS * wavelength;
    let span = span_of(0, n.saturating_sub(1));
    if n < 2 || span < min_span {
        return Err(AnalysisError::DegenerateFit(format!(
            "span {span:.3e} m is shorter than {MIN_FIT_WAVELENGTHS} wavelengths ({min_span:.3e} m)"
        )));
    }
    let dx = profile.spacing();
    let half = profile
        .local_mean_window
        .map_or(0, |w| ((w / dx).round() as usize) / 2);
    let (a, b) = if n > 2 * half && span_of(half, n - 1 - half) >= min_span {
        (half, n - 1 - half)
    } else {
        (0, n - 1)
    };
    let xs = &profile.x[a..=b];
    let ys = &profile.local_mean_db[a..=b];
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    Ok(-sxy / sxx)
}

/// Level spectrum in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub db: Vec<f64>,
}

impl Spectrum {
    pub fn to_csv(&self, column: &str) -> String {
        let mut out = format!("freq_hz,{column}\n");
        for (f, v) in self.frequencies.iter().zip(&self.db) {
            let _ = writeln!(out, "{},{}", num(*f), num(*v));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandMetrics {
    pub f_peak: f64,
    pub peak_db: f64,
    pub band_3db: (f64, f64),
    /// Set when an edge runs into the first or last sample.
    pub truncated: bool,
    pub warnings: Vec<String>,
}

/// Peak and the contiguous 3-dB band around it, edges linearly interpolated.
pub fn band_metrics(spectrum: &Spectrum) -> Result<BandMetrics> {
    let f = &spectrum.frequencies;
    let v = &spectrum.db;
    if f.len() != v.len() {
        return Err(AnalysisError::Invalid(format!(
            "{} frequencies for {} levels",
            f.len(),
            v.len()
        )));
    }
    if f.len() < MIN_SPECTRUM_POINTS {
        return Err(AnalysisError::TooFewPoints(f.len()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(AnalysisError::Invalid("non-finite spectrum level".into()));
    }
    let (k, &peak) = v
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        });
    if k == 0 || k == v.len() - 1 {
        return Err(AnalysisError::NoPeak);
    }
    let level = peak - 3.0;
    let crossing = |a: usize, b: usize| {
        let t = (v[a] - level) / (v[a] - v[b]);
        f[a] + t * (f[b] - f[a])
    };
    let mut warnings = Vec::new();
    let mut lo = k;
    while lo > 0 && v[lo - 1] >= level {
        lo -= 1;
    }
    let f_lo = if lo == 0 {
        warnings.push(format!(
            "3-dB band reaches the lower sweep edge {:.4e} Hz",
            f[0]
        ));
        f[0]
    } else {
        crossing(lo, lo - 1)
    };
    let mut hi = k;
    while hi + 1 < v.len() && v[hi + 1] >= level {
        hi += 1;
    }
    let f_hi = if hi == v.len() - 1 {
        warnings.push(format!(
            "3-dB band reaches the upper sweep edge {:.4e} Hz",
            f[v.len() - 1]
        ));
        f[v.len() - 1]
    } else {
        crossing(hi, hi + 1)
    };
    Ok(BandMetrics {
        f_peak: f[k],
        peak_db: peak,
        band_3db: (f_lo, f_hi),
        truncated: !warnings.is_empty(),
        warnings,
    })
}

/// Metrics of one model run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnalysisReport {
    pub label: String,
    pub porosity: f64,
    pub sigma: Option<f64>,
    pub path_loss: Option<f64>,
    pub s21_proxy: Option<Spectrum>,
    pub s11_proxy: Option<Spectrum>,
    pub f_peak: Option<f64>,
    pub band_3db: Option<(f64, f64)>,
    pub warnings: Vec<String>,
}

impl AnalysisReport {
    /// Fluctuation and path loss from a centerline profile.
    pub fn from_profile(
        label: impl Into<String>,
        porosity: f64,
        profile: &CenterlineProfile,
        wavelength: f64,
    ) -> Result<Self> {
        let mut report = Self {
            label: label.into(),
            porosity,
            sigma: Some(fluctuation_sd(profile)?),
            ..Self::default()
        };
        match path_loss_fit(profile, wavelength) {
            Ok(l) => report.path_loss = Some(l),
            Err(e) => report.warnings.push(e.to_string()),
        }
        Ok(report)
    }

    /// Attach sweep spectra and their band metrics.
    pub fn with_spectra(mut self, s21: Spectrum, s11: Spectrum) -> Self {
        match band_metrics(&s21) {
            Ok(m) => {
                self.f_peak = Some(m.f_peak);
                self.band_3db = Some(m.band_3db);
                self.warnings.extend(m.warnings);
            }
            Err(e) => self.warnings.push(format!("band metrics: {e}")),
        }
        self.s21_proxy = Some(s21);
        self.s11_proxy = Some(s11);
        self
    }

    pub fn csv_header() -> &'static str {
        "model,porosity_pct,sigma_db,path_loss_db_per_m,f_peak_hz,band_lo_hz,band_hi_hz\n"
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), num);
        format!(
            "{},{},{},{},{},{},{}\n",
            self.label,
            num(self.porosity * 100.0),
            opt(self.sigma),
            opt(self.path_loss),
            opt(self.f_peak),
            opt(self.band_3db.map(|b| b.0)),
            opt(self.band_3db.map(|b| b.1)),
        )
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model: {}", self.label);
        let _ = writeln!(out, "porosity: {:.2} %", self.porosity * 100.0);
        if let Some(s) = self.sigma {
            let _ = writeln!(out, "fluctuation SD: {s:.4} dB");
        }
        if let Some(l) = self.path_loss {
            let _ = writeln!(out, "path loss: {l:.4} dB/m");
        }
        if let Some(f) = self.f_peak {
            let _ = writeln!(out, "peak frequency: {:.4} GHz", f / 1e9);
        }
        if let Some((lo, hi)) = self.band_3db {
            let _ = writeln!(out, "3-dB band: {:.4} - {:.4} GHz", lo / 1e9, hi / 1e9);
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn uniform(n: usize, dx: f64, f: impl Fn(f64) -> f64) -> CenterlineProfile {
        let x: Vec<f64> = (0..n).map(|i| i as f64 * dx).collect();
        let p = x.iter().map(|&x| f(x)).collect();
        CenterlineProfile::from_db(x, p, 1.0).unwrap()
    }

    #[test]
    fn constant_profile() {
        let p = uniform(200, 1e-3, |_| -7.5).with_local_mean(20e-3).unwrap();
        assert!(p.local_mean_db.iter().all(|&m| (m + 7.5).abs() < 1e-12));
        assert_eq!(fluctuation_sd(&p).unwrap(), 0.0);
        assert!(path_loss_fit(&p, 10e-3).unwrap().abs() < 1e-12);
    }

    #[test]
    fn full_period_average_cancels() {
        for samples_per_period in [20usize, 21] {
            let dx = 1e-3;
            let period = samples_per_period as f64 * dx;
            let p = uniform(300, dx, |x| 3.0 + 2.0 * (2.0 * PI * x / period + 0.3).sin());
            let m = local_mean(&p, period).unwrap();
            let h = samples_per_period / 2;
            for v in &m[h..300 - h] {
                assert!((v - 3.0).abs() < 1e-9, "{v}");
            }
        }
    }

    #[test]
    fn ramp_is_preserved() {
        let p = uniform(100, 1e-3, |x| 4.0 - 300.0 * x);
        let m = local_mean(&p, 9e-3).unwrap();
        for (a, b) in m.iter().zip(&p.p_db) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn window_too_small() {
        let p = uniform(100, 1e-3, |_| 0.0);
        assert!(matches!(
            local_mean(&p, 1.5e-3),
            Err(AnalysisError::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn sinusoid_sd() {
        // window much longer than the ripple period
        let p = uniform(4000, 0.5e-3, |x| 0.8 * (2.0 * PI * x / 7e-3).sin())
            .with_local_mean(70e-3)
            .unwrap();
        let sd = fluctuation_sd(&p).unwrap();
        assert!(
            (sd - 0.8 / 2f64.sqrt()).abs() / (0.8 / 2f64.sqrt()) < 0.01,
            "{sd}"
        );
    }

    #[test]
    fn missing_mean_and_short_span() {
        let p = uniform(100, 1e-3, |_| 0.0);
        assert_eq!(fluctuation_sd(&p), Err(AnalysisError::MissingLocalMean));
        let p = p.with_local_mean(5e-3).unwrap();
        assert!(matches!(
            path_loss_fit(&p, 30e-3),
            Err(AnalysisError::DegenerateFit(_))
        ));
    }

    #[test]
    fn gaussian_band() {
        let step = 0.25e9;
        let f: Vec<f64> = (0..77).map(|k| 15e9 + k as f64 * step).collect();
        let sigma = 4.95e9 / (6.0 / (20.0 * std::f64::consts::LOG10_E)).sqrt();
        let db = f
            .iter()
            .map(|&f| {
                -11.6 - 20.0 * std::f64::consts::LOG10_E * 0.5 * ((f - 24.5e9) / sigma).powi(2)
            })
            .collect();
        let m = band_metrics(&Spectrum { frequencies: f, db }).unwrap();
        assert!((m.f_peak - 24.5e9).abs() <= step);
        assert!((m.band_3db.0 - 19.55e9).abs() <= step, "{:?}", m.band_3db);
        assert!((m.band_3db.1 - 29.45e9).abs() <= step, "{:?}", m.band_3db);
        assert!(!m.truncated);
    }

    #[test]
    fn flat_and_truncated_spectra() {
        let f: Vec<f64> = (0..12).map(|k| k as f64).collect();
        let flat = Spectrum {
            frequencies: f.clone(),
            db: vec![-3.0; 12],
        };
        assert_eq!(band_metrics(&flat), Err(AnalysisError::NoPeak));
        let rising = Spectrum {
            frequencies: f.clone(),
            db: f.clone(),
        };
        assert_eq!(band_metrics(&rising), Err(AnalysisError::NoPeak));
        let broad = Spectrum {
            frequencies: f.clone(),
            db: f.iter().map(|x| -0.1 * (x - 5.0).powi(2)).collect(),
        };
        let m = band_metrics(&broad).unwrap();
        assert!(m.truncated);
        assert_eq!(m.band_3db.0, 0.0);
        let short = Spectrum {
            frequencies: vec![1.0; 5],
            db: vec![0.0; 5],
        };
        assert_eq!(band_metrics(&short), Err(AnalysisError::TooFewPoints(5)));
    }
}
