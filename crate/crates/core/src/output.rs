//! Text formatting shared by the CSV writers.

/// Shortest round-trip form; scientific notation outside `[1e-5, 1e16)`.
pub(crate) fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}
