//! Jacobi operators, bound states, Jost solutions and scattering data.
//!
//! All routines here assume the normalized background `a0 = 1/2, b0 = 0`,
//! where the continuous spectrum is `[-1, 1]` and `λ = (k + 1/k)/2`.

mod jost;
mod tridiag;

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{check_schema, default_schema, LatticeState, SCHEMA_VERSION};

pub use jost::ScatteringCoefficients;

/// Eigenvalues closer than this to `[-1, 1]` are treated as continuum.
pub const SPECTRAL_MARGIN: f64 = 1e-8;
/// Background sites kept on each side of the perturbation in a truncation.
pub const MIN_TRUNCATION_MARGIN: i64 = 50;
/// Sites at each truncation edge whose eigenvector mass is checked.
pub const LOCALIZATION_EDGE: usize = 10;
pub const LOCALIZATION_TOL: f64 = 1e-10;
/// Angular half-width of the arcs around `k = ±1` left out of default grids.
pub const BAND_EDGE_EXCLUSION: f64 = 1e-3;

/// View of a normalized state as the operator `H = a S⁺ + a⁻ S⁻ + b`.
#[derive(Debug, Clone, Copy)]
pub struct JacobiOperator<'a> {
    state: &'a LatticeState,
}

pub fn build_jacobi(state: &LatticeState) -> Result<JacobiOperator<'_>> {
    if !state.is_normalized() {
        return Err(Error::Unnormalized { a0: state.a0(), b0: state.b0() });
    }
    Ok(JacobiOperator { state })
}

impl<'a> JacobiOperator<'a> {
    pub fn state(&self) -> &'a LatticeState {
        self.state
    }

    pub fn a(&self, n: i64) -> f64 {
        self.state.a(n)
    }

    pub fn b(&self, n: i64) -> f64 {
        self.state.b(n)
    }

    /// Applies `H` to the vector supported on `lo..lo + v.len()`. The result
    /// lives on `lo - 1..=lo + v.len()`.
    pub fn apply(&self, lo: i64, v: &[f64]) -> Vec<f64> {
        let at = |n: i64| {
            let i = n - lo;
            if (0..v.len() as i64).contains(&i) {
                v[i as usize]
            } else {
                0.0
            }
        };
        ((lo - 1)..=(lo + v.len() as i64))
            .map(|n| self.a(n) * at(n + 1) + self.b(n) * at(n) + self.a(n - 1) * at(n - 1))
            .collect()
    }

    /// Diagonal and off-diagonal of the truncation to `lo..=hi`.
    pub fn tridiagonal(&self, lo: i64, hi: i64) -> (Vec<f64>, Vec<f64>) {
        ((lo..=hi).map(|n| self.b(n)).collect(), (lo..hi).map(|n| self.a(n)).collect())
    }

    pub fn dense(&self, lo: i64, hi: i64) -> DMatrix<f64> {
        let n = (hi - lo + 1).max(0) as usize;
        DMatrix::from_fn(n, n, |i, j| {
            let (p, q) = (lo + i as i64, lo + j as i64);
            match p - q {
                0 => self.b(p),
                -1 => self.a(p),
                1 => self.a(q),
                _ => 0.0,
            }
        })
    }

    /// Truncation window of at least `truncation` sites around the
    /// perturbation, widened so that `MIN_TRUNCATION_MARGIN` background sites
    /// remain on each side.
    pub fn truncation_window(&self, truncation: usize) -> (i64, i64) {
        let (slo, shi) = self.state.support(0.0).unwrap_or((self.state.n_min(), self.state.n_max()));
        let width = shi - slo + 1;
        let len = (truncation as i64).max(width + 2 * MIN_TRUNCATION_MARGIN);
        let lo = slo - (len - width) / 2;
        (lo, lo + len - 1)
    }
}

/// `λ = (k + 1/k)/2`.
pub fn lambda_from_k(k: f64) -> f64 {
    0.5 * (k + k.recip())
}

/// Inverse of [`lambda_from_k`] on `|λ| > 1`, with `|k| < 1` and the sign of `λ`.
pub fn k_from_lambda(lambda: f64) -> f64 {
    let s = lambda.signum();
    let root = (lambda * lambda - 1.0).sqrt();
    // 1/(λ + sign·root) avoids cancellation in λ - sign·root
    1.0 / (lambda + s * root)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundState {
    pub k: f64,
    pub lambda: f64,
}

pub fn bound_states(h: &JacobiOperator, truncation: usize) -> Result<Vec<BoundState>> {
    bound_states_with_margin(h, truncation, SPECTRAL_MARGIN)
}

/// Eigenvalues of the dense truncation with `|λ| > 1 + margin`, sorted by `λ`.
pub fn bound_states_with_margin(h: &JacobiOperator, truncation: usize, margin: f64) -> Result<Vec<BoundState>> {
    if h.state.is_background() {
        return Ok(Vec::new());
    }
    let (lo, hi) = h.truncation_window(truncation);
    let (diag, off) = h.tridiagonal(lo, hi);
    Ok(tridiag::eigenvalues(&diag, &off)?
        .into_iter()
        .filter(|l| l.abs() > 1.0 + margin)
        .map(|lambda| BoundState { k: k_from_lambda(lambda), lambda })
        .collect())
}

/// Reflection coefficient `R_+` or `R_-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

/// `R_±(k)` for `|k| = 1`, `k ≠ ±1`.
pub fn jost_and_reflection(h: &JacobiOperator, k: Complex64, side: Side) -> Result<Complex64> {
    let c = jost::scattering_coefficients(h.state, k)?;
    Ok(match side {
        Side::Plus => c.r_plus,
        Side::Minus => c.r_minus,
    })
}

/// Transmission and both reflection coefficients from one pair of sweeps.
pub fn scattering_coefficients(h: &JacobiOperator, k: Complex64) -> Result<ScatteringCoefficients> {
    jost::scattering_coefficients(h.state, k)
}

/// `(γ_+, γ_-)` for each bound state, with `γ_±⁻¹ = Σ_n f_±(k, n)²`.
///
/// The decaying Jost solutions are only stable in the direction in which
/// they grow, so `f_+` is recursed leftwards and `f_-` rightwards up to the
/// peak of the eigenvector, and the two are joined there by their ratio.
pub fn norming_constants(h: &JacobiOperator, bound: &[BoundState], truncation: usize) -> Result<Vec<(f64, f64)>> {
    if bound.is_empty() {
        return Ok(Vec::new());
    }
    let (lo, hi) = h.truncation_window(truncation);
    let (diag, off) = h.tridiagonal(lo, hi);
    let (n_min, n_max) = (h.state.n_min(), h.state.n_max());
    bound
        .iter()
        .map(|bs| {
            let v = tridiag::eigenvector(&diag, &off, bs.lambda);
            let e = LOCALIZATION_EDGE.min(v.len() / 2);
            let mass: f64 = v[..e].iter().chain(&v[v.len() - e..]).map(|x| x * x).sum();
            if mass > LOCALIZATION_TOL {
                return Err(Error::Localization { lambda: bs.lambda, mass });
            }
            let peak = v.iter().enumerate().max_by(|x, y| x.1.abs().total_cmp(&y.1.abs())).unwrap().0;
            let np = lo + peak as i64;
            let k = bs.k;
            let lnk = k.abs().ln();
            let tail = 1.0 - k * k;

            let top = (n_max + 2).max(np + 3);
            let fp = jost::jost_plus_real(h.state, k, np - 2, top);
            let bottom = (n_min - 2).min(np - 3);
            let fm = jost::jost_minus_real(h.state, k, bottom, np + 2);

            // work relative to the magnitudes at the peak
            let sp = fp.log_abs(np);
            let sm = fm.log_abs(np);
            let (mut cross, mut mm) = (0.0, 0.0);
            for n in (np - 2)..=(np + 2) {
                let (x, y) = (fp.scaled(n, sp), fm.scaled(n, sm));
                cross += x * y;
                mm += y * y;
            }
            let c = cross / mm;
            let right: f64 = ((np + 1)..=top).map(|n| fp.scaled(n, sp).powi(2)).sum::<f64>()
                + (2.0 * (top + 1) as f64 * lnk - 2.0 * sp).exp() / tail;
            let left: f64 = (bottom..=np).map(|n| fm.scaled(n, sm).powi(2)).sum::<f64>()
                + (-2.0 * (bottom - 1) as f64 * lnk - 2.0 * sm).exp() / tail;
            let gamma_plus = (-2.0 * sp).exp() / (right + c * c * left);
            let gamma_minus = (-2.0 * sm).exp() / (left + right / (c * c));
            if !(gamma_plus > 0.0 && gamma_minus > 0.0 && gamma_plus.is_finite() && gamma_minus.is_finite()) {
                return Err(Error::Domain(format!("norming constants out of range at λ = {}", bs.lambda)));
            }
            Ok((gamma_plus, gamma_minus))
        })
        .collect()
}

/// Bound state with both norming constants, as stored in [`ScatteringData`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundStateData {
    pub k: f64,
    pub lambda: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
}

/// Reflection coefficients on a grid of unit-circle points plus the
/// discrete data, at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringData {
    pub t: f64,
    pub k_grid: Vec<Complex64>,
    pub r_plus: Vec<Complex64>,
    pub r_minus: Vec<Complex64>,
    /// Sorted by `λ`.
    pub bound_states: Vec<BoundStateData>,
}

/// `n` equispaced points on the upper unit semicircle, leaving out arcs of
/// angle [`BAND_EDGE_EXCLUSION`] around `k = ±1`.
pub fn default_k_grid(n: usize) -> Vec<Complex64> {
    let (lo, hi) = (BAND_EDGE_EXCLUSION, std::f64::consts::PI - BAND_EDGE_EXCLUSION);
    match n {
        0 => Vec::new(),
        1 => vec![Complex64::from_polar(1.0, 0.5 * (lo + hi))],
        _ => (0..n).map(|j| Complex64::from_polar(1.0, lo + (hi - lo) * j as f64 / (n - 1) as f64)).collect(),
    }
}

/// Full forward scattering transform of `h` on `k_grid`.
pub fn scattering_data(h: &JacobiOperator, k_grid: &[Complex64], truncation: usize) -> Result<ScatteringData> {
    let coeffs: Vec<ScatteringCoefficients> =
        k_grid.par_iter().map(|&k| scattering_coefficients(h, k)).collect::<Result<_>>()?;
    let bound = bound_states(h, truncation)?;
    let gammas = norming_constants(h, &bound, truncation)?;
    Ok(ScatteringData {
        t: h.state.t(),
        k_grid: k_grid.to_vec(),
        r_plus: coeffs.iter().map(|c| c.r_plus).collect(),
        r_minus: coeffs.iter().map(|c| c.r_minus).collect(),
        bound_states: bound
            .iter()
            .zip(gammas)
            .map(|(b, (gp, gm))| BoundStateData { k: b.k, lambda: b.lambda, gamma_plus: gp, gamma_minus: gm })
            .collect(),
    })
}

impl ScatteringData {
    /// True when no grid point carries reflection above `tol`.
    pub fn is_reflectionless(&self, tol: f64) -> bool {
        self.r_plus.iter().chain(&self.r_minus).all(|r| r.norm() <= tol)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ScatteringFile::from(self)).expect("scattering data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ScatteringFile = serde_json::from_str(text)?;
        f.try_into()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScatteringFile {
    #[serde(default = "default_schema")]
    schema_version: u32,
    t: f64,
    k_grid: Vec<[f64; 2]>,
    #[serde(rename = "R_plus")]
    r_plus: Vec<[f64; 2]>,
    #[serde(rename = "R_minus")]
    r_minus: Vec<[f64; 2]>,
    bound_states: Vec<BoundStateData>,
}

fn pairs(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn complexes(v: Vec<[f64; 2]>) -> Vec<Complex64> {
    v.into_iter().map(|[re, im]| Complex64::new(re, im)).collect()
}

impl From<&ScatteringData> for ScatteringFile {
    fn from(sd: &ScatteringData) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            t: sd.t,
            k_grid: pairs(&sd.k_grid),
            r_plus: pairs(&sd.r_plus),
            r_minus: pairs(&sd.r_minus),
            bound_states: sd.bound_states.clone(),
        }
    }
}

impl TryFrom<ScatteringFile> for ScatteringData {
    type Error = Error;

    fn try_from(f: ScatteringFile) -> Result<Self> {
        check_schema(f.schema_version)?;
        let n = f.k_grid.len();
        if f.r_plus.len() != n || f.r_minus.len() != n {
            return Err(Error::Schema(format!(
                "k_grid has {n} points but R_plus/R_minus have {}/{}",
                f.r_plus.len(),
                f.r_minus.len()
            )));
        }
        for b in &f.bound_states {
            if !(b.k.abs() < 1.0 && b.k != 0.0 && b.gamma_plus > 0.0 && b.gamma_minus > 0.0) {
                return Err(Error::Schema(format!("invalid bound state {b:?}")));
            }
        }
        Ok(Self {
            t: f.t,
            k_grid: complexes(f.k_grid),
            r_plus: complexes(f.r_plus),
            r_minus: complexes(f.r_minus),
            bound_states: f.bound_states,
        })
    }
}
