//! CSV and PGM writers for field records.
//!
//! Numbers use `{:.8e}` (9 significant digits) so outputs are byte-stable.

use std::fmt::Write as _;

use super::FieldRecord;

pub fn num(v: f64) -> String {
    format!("{v:.8e}")
}

/// Amplitude map as CSV: `#` header lines with the grid placement, then one
/// row per grid row (`y` increasing), `nx` values each.
pub fn amplitude_map_csv(record: &FieldRecord) -> Option<String> {
    let map = record.amplitude_map.as_ref()?;
    let g = &record.grid;
    let mut out = String::new();
    let _ = writeln!(out, "# amplitude map, linear units, row-major (rows are y)");
    let _ = writeln!(out, "# nx={} ny={}", g.nx, g.ny);
    let _ = writeln!(out, "# x0={} y0={} dx={}", num(g.x0), num(g.y0), num(g.dx));
    let _ = writeln!(
        out,
        "# frequency_hz={} extraction={:?}",
        num(record.metadata.config.source.frequency),
        record.metadata.config.extraction
    );
    for row in map.chunks(g.nx) {
        let line: Vec<String> = row.iter().map(|&v| num(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    Some(out)
}

/// Binary greyscale image of the amplitude map in dB, `dynamic_range_db`
/// below the maximum mapped to black. The top image row is the largest `y`.
pub fn amplitude_map_pgm(record: &FieldRecord, dynamic_range_db: f64) -> Option<Vec<u8>> {
    let map = record.amplitude_map.as_ref()?;
    let g = &record.grid;
    let peak = map.iter().cloned().fold(0.0f64, f64::max);
    let mut out = format!("P5\n{} {}\n255\n", g.nx, g.ny).into_bytes();
    for row in map.chunks(g.nx).rev() {
        for &v in row {
            let level = if peak > 0.0 && v > 0.0 {
                let db = 20.0 * (v / peak).log10();
                (1.0 + db / dynamic_range_db).clamp(0.0, 1.0)
            } else {
                0.0
            };
            out.push((level * 255.0).round() as u8);
        }
    }
    Some(out)
}

/// Probe time series: `time_s` then one column per probe.
pub fn probe_series_csv(record: &FieldRecord) -> String {
    let mut out = String::from("time_s");
    for s in &record.probe_series {
        out.push(',');
        out.push_str(&s.probe.name);
    }
    out.push('\n');
    let dt = record.metadata.time_step;
    let len = record
        .probe_series
        .iter()
        .map(|s| s.values.len())
        .max()
        .unwrap_or(0);
    for n in 0..len {
        out.push_str(&num((n + 1) as f64 * dt));
        for s in &record.probe_series {
            out.push(',');
            out.push_str(&num(s.values.get(n).copied().unwrap_or(f64::NAN)));
        }
        out.push('\n');
    }
    out
}

/// Probe spectra: `freq_hz` then real and imaginary columns per probe.
pub fn probe_spectra_csv(record: &FieldRecord) -> String {
    let mut out = String::from("freq_hz");
    for s in &record.probe_spectra {
        let _ = write!(out, ",{0}_re,{0}_im", s.probe.name);
    }
    out.push('\n');
    let Some(first) = record.probe_spectra.first() else {
        return out;
    };
    for (k, &f) in first.frequencies.iter().enumerate() {
        out.push_str(&num(f));
        for s in &record.probe_spectra {
            let v = s.values[k];
            let _ = write!(out, ",{},{}", num(v.re), num(v.im));
        }
        out.push('\n');
    }
    out
}
