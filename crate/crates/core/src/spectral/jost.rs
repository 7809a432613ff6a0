//! Jost solutions by the three-term recurrence
//! `a(n) f(n+1) + b(n) f(n) + a(n-1) f(n-1) = λ f(n)` with `λ = (k + 1/k)/2`.
//!
//! Outside the window the coefficients are exactly free, so
//! `f_-(k, n) = k^{-n}` for `n < n_min` and `f_+(k, n) = k^n` for `n > n_max`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::LatticeState;

/// Transmission and both reflection coefficients at one `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringCoefficients {
    pub transmission: Complex64,
    pub r_plus: Complex64,
    pub r_minus: Complex64,
}

pub(crate) fn check_unit_circle(k: Complex64) -> Result<()> {
    if !k.re.is_finite() || !k.im.is_finite() || (k.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!("k = {k} is not on the unit circle")));
    }
    if (k - 1.0).norm() < 1e-10 || (k + 1.0).norm() < 1e-10 {
        return Err(Error::BandEdge(k));
    }
    Ok(())
}

/// Coefficients `(x, y)` in `f(n) = x k^{-n} + y k^{n}` from two consecutive
/// free samples `f(n1)`, `f(n1 + 1)`.
fn free_decomposition(k: Complex64, n1: i64, f1: Complex64, f2: Complex64) -> (Complex64, Complex64) {
    let det = k - k.inv();
    let p = |n: i64| k.powi(n as i32);
    let x = (f1 * p(n1 + 1) - f2 * p(n1)) / det;
    let y = (p(-n1) * f2 - p(-(n1 + 1)) * f1) / det;
    (x, y)
}

/// Transfer-matrix scattering at `|k| = 1`.
pub(crate) fn scattering_coefficients(state: &LatticeState, k: Complex64) -> Result<ScatteringCoefficients> {
    check_unit_circle(k)?;
    let lambda = (k + k.inv()) * 0.5;
    let (lo, hi) = (state.n_min(), state.n_max());
    let len = (hi - lo + 5) as usize;
    let idx = |n: i64| (n - (lo - 2)) as usize;

    // f_- from the left: on the right, f_- = C k^{-n} + D k^n
    let mut f = vec![Complex64::new(0.0, 0.0); len];
    f[0] = k.powi(-(lo - 2) as i32);
    f[1] = k.powi(-(lo - 1) as i32);
    for n in (lo - 1)..=(hi + 1) {
        let i = idx(n);
        f[i + 1] = ((lambda - state.b(n)) * f[i] - state.a(n - 1) * f[i - 1]) / state.a(n);
    }
    let (c, d) = free_decomposition(k, hi + 1, f[idx(hi + 1)], f[idx(hi + 2)]);

    // f_+ from the right: on the left, f_+ = A k^n + B k^{-n}
    let mut g = vec![Complex64::new(0.0, 0.0); len];
    g[idx(hi + 2)] = k.powi((hi + 2) as i32);
    g[idx(hi + 1)] = k.powi((hi + 1) as i32);
    for n in ((lo - 1)..=(hi + 1)).rev() {
        let i = idx(n);
        g[i - 1] = ((lambda - state.b(n)) * g[i] - state.a(n) * g[i + 1]) / state.a(n - 1);
    }
    let (b_coef, a_coef) = free_decomposition(k, lo - 2, g[0], g[1]);

    Ok(ScatteringCoefficients { transmission: c.inv(), r_plus: d / c, r_minus: b_coef / a_coef })
}

/// A real solution stored as mantissa and log-scale per site, so that
/// exponentially growing recursions neither overflow nor lose their tails.
pub(crate) struct ScaledSolution {
    pub lo: i64,
    mant: Vec<f64>,
    log_scale: Vec<f64>,
}

const RESCALE_AT: f64 = 1e100;

impl ScaledSolution {
    /// `f(n) e^{-s}`.
    pub fn scaled(&self, n: i64, s: f64) -> f64 {
        let i = (n - self.lo) as usize;
        self.mant[i] * (self.log_scale[i] - s).exp()
    }

    pub fn log_abs(&self, n: i64) -> f64 {
        let i = (n - self.lo) as usize;
        self.mant[i].abs().ln() + self.log_scale[i]
    }
}

fn sign_pow(k: f64, n: i64) -> f64 {
    if k < 0.0 && n.rem_euclid(2) == 1 {
        -1.0
    } else {
        1.0
    }
}

/// `f_+(k, n)` for real `0 < |k| < 1` on `lo..=hi`, where `hi ≥ n_max + 2`.
pub(crate) fn jost_plus_real(state: &LatticeState, k: f64, lo: i64, hi: i64) -> ScaledSolution {
    debug_assert!(hi >= state.n_max() + 2 && lo < hi);
    let lambda = 0.5 * (k + 1.0 / k);
    let len = (hi - lo + 1) as usize;
    let mut mant = vec![0.0; len];
    let mut log_scale = vec![0.0; len];
    let mut s = (hi - 1) as f64 * k.abs().ln();
    let (mut f_next, mut f_cur) = (sign_pow(k, hi - 1) * k, sign_pow(k, hi - 1));
    mant[len - 1] = f_next;
    mant[len - 2] = f_cur;
    log_scale[len - 1] = s;
    log_scale[len - 2] = s;
    for n in ((lo + 1)..hi).rev() {
        let mut f_prev = ((lambda - state.b(n)) * f_cur - state.a(n) * f_next) / state.a(n - 1);
        if f_prev.abs() > RESCALE_AT {
            f_prev /= RESCALE_AT;
            f_cur /= RESCALE_AT;
            s += RESCALE_AT.ln();
        }
        let i = (n - 1 - lo) as usize;
        mant[i] = f_prev;
        log_scale[i] = s;
        f_next = f_cur;
        f_cur = f_prev;
    }
    ScaledSolution { lo, mant, log_scale }
}

/// `f_-(k, n)` for real `0 < |k| < 1` on `lo..=hi`, where `lo ≤ n_min - 2`.
pub(crate) fn jost_minus_real(state: &LatticeState, k: f64, lo: i64, hi: i64) -> ScaledSolution {
    debug_assert!(lo <= state.n_min() - 2 && lo < hi);
    let lambda = 0.5 * (k + 1.0 / k);
    let len = (hi - lo + 1) as usize;
    let mut mant = vec![0.0; len];
    let mut log_scale = vec![0.0; len];
    // k^{-n} = sign * |k|^{-n}
    let mut s = -((lo + 1) as f64) * k.abs().ln();
    let (mut f_prev, mut f_cur) = (sign_pow(k, lo + 1) * k, sign_pow(k, lo + 1));
    mant[0] = f_prev;
    mant[1] = f_cur;
    log_scale[0] = s;
    log_scale[1] = s;
    for n in (lo + 1)..hi {
        let mut f_next = ((lambda - state.b(n)) * f_cur - state.a(n - 1) * f_prev) / state.a(n);
        if f_next.abs() > RESCALE_AT {
            f_next /= RESCALE_AT;
            f_cur /= RESCALE_AT;
            s += RESCALE_AT.ln();
        }
        let i = (n + 1 - lo) as usize;
        mant[i] = f_next;
        log_scale[i] = s;
        f_prev = f_cur;
        f_cur = f_next;
    }
    ScaledSolution { lo, mant, log_scale }
}
