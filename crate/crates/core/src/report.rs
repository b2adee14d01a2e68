//! Text serialization shared by the CSV and NDJSON writers.

/// Formats a float with 17 significant digits (`d.dddddddddddddddde±x`).
///
/// Non-finite values are written as `NaN`, `inf` or `-inf`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// `fmt_f64` for optional cells; `None` becomes an empty field.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}
