//! Time evolution of scattering data, the dispersion function `α_r`, and
//! finite-sample indicator estimates.
//!
//! Under `TL_r` the scattering data move by
//!
//! ```text
//! R_±(k, t) = R_±(k, 0) e^{±α_r(k) t},   γ_{±,l}(t) = γ_{±,l}(0) e^{±α_r(k_l) t},
//! ```
//!
//! with `α_r(k) = (k - 1/k) G_{0,r}((k + 1/k)/2)` for a monic `G_{0,r}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hierarchy::HierarchyCoeffs;
use crate::output::fmt_num;
use crate::lattice::{check_schema, default_schema, SCHEMA_VERSION};
use crate::spectral::{BoundStateData, ScatteringData};

/// Reflection magnitudes at or below this carry no usable phase.
pub const SIGNAL_FLOOR: f64 = 1e-12;

/// Reflection at or below this level counts as zero for the growth witness;
/// numerically built solitons carry residual reflection of order `1e-11`.
pub const REFLECTIONLESS_TOL: f64 = 1e-8;

/// Laurent polynomial `α_r(k) = Σ_{|j| ≤ r+1} d_j k^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionLaw {
    r: usize,
    /// `d[j + r + 1] = d_j`.
    d: Vec<f64>,
    residual: f64,
}

fn binomial(n: usize, m: usize) -> f64 {
    (0..m).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl DispersionLaw {
    /// Law from the coefficients `d_{-(r+1)}, …, d_{r+1}` in ascending order.
    pub fn from_coefficients(d: Vec<f64>) -> Result<Self> {
        if d.len() < 3 || d.len() % 2 == 0 {
            return Err(Error::Domain(format!("need 2r + 3 Laurent coefficients, got {}", d.len())));
        }
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite Laurent coefficient".into()));
        }
        Ok(Self { r: (d.len() - 3) / 2, d, residual: 0.0 })
    }

    /// `α_0(k) = k - 1/k`.
    pub fn toda() -> Self {
        Self { r: 0, d: vec![-1.0, 0.0, 1.0], residual: 0.0 }
    }

    /// Closed form for `TL_r` with summation constants `c`.
    ///
    /// The free symbol of `[H^{j+1}]_+ - [H^{j+1}]_-` is the odd part of
    /// `((k + 1/k)/2)^{j+1}`; `α` is twice the weighted sum of these.
    pub fn for_hierarchy(coeffs: &HierarchyCoeffs) -> Self {
        let r = coeffs.r();
        let mut d = vec![0.0; 2 * r + 3];
        for j in 0..=r {
            let w = coeffs.c()[r - j] * 2f64.powi(-(j as i32));
            for m in 0..=(j + 1) {
                let p = j as i64 + 1 - 2 * m as i64;
                d[(p + r as i64 + 1) as usize] += w * binomial(j + 1, m) * p.signum() as f64;
            }
        }
        Self { r, d, residual: 0.0 }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// `d_j`, zero for `|j| > r + 1`.
    pub fn d(&self, j: i64) -> f64 {
        let i = j + self.r as i64 + 1;
        if (0..self.d.len() as i64).contains(&i) {
            self.d[i as usize]
        } else {
            0.0
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.d
    }

    /// Fit residual (zero for laws given in closed form).
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn alpha(&self, k: Complex64) -> Result<Complex64> {
        if k == Complex64::new(0.0, 0.0) || !k.is_finite() {
            return Err(Error::Domain(format!("α is undefined at k = {k}")));
        }
        let top = self.r as i32 + 1;
        Ok(self.d.iter().enumerate().map(|(i, &dj)| dj * k.powi(i as i32 - top)).sum())
    }

    /// `α` at a real `k ≠ 0`.
    pub fn alpha_real(&self, k: f64) -> f64 {
        let top = self.r as i32 + 1;
        self.d.iter().enumerate().map(|(i, &dj)| dj * k.powi(i as i32 - top)).sum()
    }

    /// Division of `k^{r+1} α(k)` by `k² - 1`.
    ///
    /// Returns the quotient `q` (degree `2r`, ascending) and the size of the
    /// remainder plus the departure of `q` from a palindrome; the latter two
    /// vanish exactly when `α = (k - 1/k) G((k + 1/k)/2)` for a polynomial `G`.
    pub fn factor(&self) -> (Vec<f64>, f64) {
        // synthetic division from the top coefficient
        let p = &self.d;
        let deg = p.len() - 1;
        let mut q = vec![0.0; deg - 1];
        let mut work = p.clone();
        for i in (2..=deg).rev() {
            let c = work[i];
            q[i - 2] = c;
            work[i] -= c;
            work[i - 2] += c;
        }
        let remainder = work[0].abs() + work[1].abs();
        let asym = (0..q.len()).map(|i| (q[i] - q[q.len() - 1 - i]).abs()).fold(0.0, f64::max);
        (q, remainder + asym)
    }

    pub fn factorization_remainder(&self) -> f64 {
        self.factor().1
    }

    /// Coefficients of `G_{0,r}` in `z`, ascending.
    ///
    /// Uses `k^i + k^{-i} = 2 T_i(z)` on the palindromic quotient.
    pub fn g_polynomial(&self) -> Vec<f64> {
        let (q, _) = self.factor();
        let r = self.r;
        let mut cheb_prev = vec![1.0];
        let mut cheb = vec![0.0, 1.0];
        let mut g = vec![0.0; r + 1];
        g[0] = q[r];
        for i in 1..=r {
            for (p, c) in cheb.iter().enumerate() {
                g[p] += 2.0 * q[r + i] * c;
            }
            // T_{i+1} = 2 z T_i - T_{i-1}
            let mut next = vec![0.0; cheb.len() + 1];
            for (p, c) in cheb.iter().enumerate() {
                next[p + 1] += 2.0 * c;
            }
            for (p, c) in cheb_prev.iter().enumerate() {
                next[p] -= c;
            }
            cheb_prev = std::mem::replace(&mut cheb, next);
        }
        g
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&LawFile { schema_version: SCHEMA_VERSION, r: self.r, d: LaurentMap(self), residual: self.residual })
            .expect("law serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: LawFileIn = serde_json::from_str(text)?;
        check_schema(f.schema_version)?;
        let top = f.r as i64 + 1;
        let mut d = vec![0.0; 2 * f.r + 3];
        let mut seen = 0;
        for (key, v) in f.d {
            let j: i64 = key.trim().parse().map_err(|_| Error::Schema(format!("bad Laurent index {key:?}")))?;
            if j.abs() > top {
                return Err(Error::Schema(format!("Laurent index {j} outside ±{top}")));
            }
            d[(j + top) as usize] = v;
            seen += 1;
        }
        if seen != d.len() {
            return Err(Error::Schema(format!("expected {} Laurent coefficients, got {seen}", d.len())));
        }
        let mut law = Self::from_coefficients(d)?;
        law.residual = f.residual;
        Ok(law)
    }
}

struct LaurentMap<'a>(&'a DispersionLaw);

impl Serialize for LaurentMap<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let law = self.0;
        let top = law.r as i64 + 1;
        let mut m = s.serialize_map(Some(law.d.len()))?;
        for j in -top..=top {
            m.serialize_entry(&j.to_string(), &law.d(j))?;
        }
        m.end()
    }
}

#[derive(Serialize)]
struct LawFile<'a> {
    schema_version: u32,
    r: usize,
    d: LaurentMap<'a>,
    residual: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LawFileIn {
    #[serde(default = "default_schema")]
    schema_version: u32,
    r: usize,
    d: BTreeMap<String, f64>,
    #[serde(default)]
    residual: f64,
}

/// Least-squares Laurent fit of `log(R_+(k, t1) / R_+(k, t0)) / (t1 - t0)`.
///
/// The logarithm's phase is unwrapped along the grid order starting from its
/// principal value at the first usable point; this matches `α` because `α`
/// is continuous on the arc and vanishes at `k = 1`.
pub fn fit_dispersion(sd0: &ScatteringData, sd1: &ScatteringData, r: usize) -> Result<DispersionLaw> {
    if sd0.k_grid.len() != sd1.k_grid.len()
        || sd0.k_grid.iter().zip(&sd1.k_grid).any(|(a, b)| (a - b).norm() > 1e-14)
    {
        return Err(Error::Domain("scattering data live on different k-grids".into()));
    }
    let dt = sd1.t - sd0.t;
    if dt == 0.0 || !dt.is_finite() {
        return Err(Error::Domain("both scattering data carry the same time".into()));
    }
    let usable: Vec<usize> = (0..sd0.k_grid.len())
        .filter(|&i| sd0.r_plus[i].norm() > SIGNAL_FLOOR && sd1.r_plus[i].norm() > SIGNAL_FLOOR)
        .collect();
    if 2 * usable.len() <= sd0.k_grid.len() {
        return Err(Error::InsufficientSignal(format!(
            "|R_+| above {SIGNAL_FLOOR:e} at {} of {} grid points",
            usable.len(),
            sd0.k_grid.len()
        )));
    }
    let unknowns = 2 * r + 3;
    if 2 * usable.len() < unknowns {
        return Err(Error::InsufficientSignal("fewer equations than Laurent coefficients".into()));
    }

    let mut logs = Vec::with_capacity(usable.len());
    let mut prev_phase: Option<f64> = None;
    for &i in &usable {
        let w = sd1.r_plus[i] / sd0.r_plus[i];
        let mut phase = w.arg();
        if let Some(p) = prev_phase {
            let jump = phase - p;
            let corrected = jump - 2.0 * PI * (jump / (2.0 * PI)).round();
            if corrected.abs() > 0.5 * PI {
                return Err(Error::BranchTracking(format!(
                    "phase step {corrected:.3} at k = {} exceeds π/2; refine the grid",
                    sd0.k_grid[i]
                )));
            }
            phase = p + corrected;
        }
        prev_phase = Some(phase);
        logs.push(Complex64::new(w.norm().ln(), phase) / dt);
    }

    let rows = 2 * usable.len();
    let top = r as i32 + 1;
    let mut a = DMatrix::<f64>::zeros(rows, unknowns);
    let mut b = DVector::<f64>::zeros(rows);
    for (row, (&i, l)) in usable.iter().zip(&logs).enumerate() {
        let k = sd0.k_grid[i];
        for c in 0..unknowns {
            let kp = k.powi(c as i32 - top);
            a[(2 * row, c)] = kp.re;
            a[(2 * row + 1, c)] = kp.im;
        }
        b[2 * row] = l.re;
        b[2 * row + 1] = l.im;
    }
    let sol = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Domain(format!("least-squares solve failed: {e}")))?;
    let res = &a * &sol - &b;
    let residual = (0..usable.len())
        .map(|row| res[2 * row].hypot(res[2 * row + 1]))
        .fold(0.0, f64::max);
    let mut law = DispersionLaw::from_coefficients(sol.iter().copied().collect())?;
    law.residual = residual;
    Ok(law)
}

/// Advances scattering data by `t` under `law`.
pub fn evolve_scattering(sd: &ScatteringData, law: &DispersionLaw, t: f64) -> Result<ScatteringData> {
    let factors: Vec<Complex64> =
        sd.k_grid.iter().map(|&k| law.alpha(k).map(|a| (a * t).exp())).collect::<Result<_>>()?;
    Ok(ScatteringData {
        t: sd.t + t,
        k_grid: sd.k_grid.clone(),
        r_plus: sd.r_plus.iter().zip(&factors).map(|(r, f)| r * f).collect(),
        r_minus: sd.r_minus.iter().zip(&factors).map(|(r, f)| r / f).collect(),
        bound_states: sd
            .bound_states
            .iter()
            .map(|b| {
                let e = (law.alpha_real(b.k) * t).exp();
                BoundStateData { k: b.k, lambda: b.lambda, gamma_plus: b.gamma_plus * e, gamma_minus: b.gamma_minus / e }
            })
            .collect(),
    })
}

/// Finite-sample estimate of the indicator `h_f(φ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorEstimate {
    pub phi: f64,
    pub radii: Vec<f64>,
    pub log_moduli: Vec<f64>,
    /// Max of `log|f(r e^{iφ})| / r` over `r ∈ [0.9 r_max, r_max]`.
    pub h_estimate: f64,
}

/// Fraction of the largest radii over which the limsup is replaced by a max.
pub const INDICATOR_TAIL: f64 = 0.1;

/// Samples `log|f|` on the ray of angle `phi` at `samples` equispaced radii
/// in `(0, r_max]`. `log_modulus` returns `log|f(z)|` directly, so that
/// entire functions of large type stay representable.
pub fn indicator_estimate(
    log_modulus: impl Fn(Complex64) -> f64,
    phi: f64,
    r_max: f64,
    samples: usize,
) -> Result<IndicatorEstimate> {
    if !(r_max > 0.0) || samples < 2 {
        return Err(Error::Domain("need r_max > 0 and at least two samples".into()));
    }
    let radii: Vec<f64> = (1..=samples).map(|i| r_max * i as f64 / samples as f64).collect();
    let mut log_moduli = Vec::with_capacity(samples);
    for &r in &radii {
        let v = log_modulus(Complex64::from_polar(r, phi));
        if v.is_nan() || v == f64::INFINITY {
            return Err(Error::Overflow(r));
        }
        log_moduli.push(v);
    }
    let cut = (1.0 - INDICATOR_TAIL) * r_max;
    let h_estimate = radii
        .iter()
        .zip(&log_moduli)
        .filter(|(r, _)| **r >= cut)
        .map(|(r, l)| l / r)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(IndicatorEstimate { phi, radii, log_moduli, h_estimate })
}

/// `log|f(z)|` for an `f` evaluated in ordinary floating point.
pub fn log_modulus_of(f: impl Fn(Complex64) -> Complex64) -> impl Fn(Complex64) -> f64 {
    move |z| {
        let v = f(z);
        if v.is_finite() {
            v.norm().ln()
        } else {
            f64::INFINITY
        }
    }
}

/// Max of the indicator estimates over `rays` equispaced directions.
pub fn exponential_type(log_modulus: impl Fn(Complex64) -> f64, r_max: f64, samples: usize, rays: usize) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for j in 0..rays.max(1) {
        let phi = 2.0 * PI * j as f64 / rays.max(1) as f64;
        best = best.max(indicator_estimate(&log_modulus, phi, r_max, samples)?.h_estimate);
    }
    Ok(best)
}

/// Which evolution factor the growth witness evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthBranch {
    /// `R_+(k, 1) = e^{α(k)} R_+(k, 0)`, used for even `r`.
    Forward,
    /// `R_+(k, 0) = e^{-α(k)} R_+(k, 1)`, used for odd `r`.
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthSample {
    pub x: f64,
    /// `log|factor(-1/x)| / x`.
    pub at_negative: f64,
    /// `log|factor(1/x)| / x`.
    pub at_positive: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub r: usize,
    pub branch: GrowthBranch,
    pub trivial: bool,
    /// Samples of the factor carrying the time evolution across unit time;
    /// at `t = 0` the factor is one and every entry would be zero.
    pub samples: Vec<GrowthSample>,
    /// `log|factor| / x^{r+1}` at the largest `x`, maximised over both directions.
    pub leading_rate: f64,
    pub growth_detected: bool,
}

pub const GROWTH_X_MAX: f64 = 30.0;
pub const GROWTH_SAMPLES: usize = 60;

/// Growth of the evolution factor along `k = ±1/x`, `x → ∞`.
///
/// For nontrivial `R_+` a factor growing like `e^{x^{r+1}}` would give
/// `R_+(·, 1)` (even `r`) or `R_+(·, 0)` (odd `r`) positive exponential type
/// near `k = 0`, which bounded reflection data with super-fast decaying
/// coefficients cannot have.
pub fn growth_exponent_witness(sd0: &ScatteringData, law: &DispersionLaw) -> GrowthReport {
    let r = law.r();
    let branch = if r % 2 == 0 { GrowthBranch::Forward } else { GrowthBranch::Backward };
    let sign = match branch {
        GrowthBranch::Forward => 1.0,
        GrowthBranch::Backward => -1.0,
    };
    let trivial = sd0.is_reflectionless(REFLECTIONLESS_TOL);
    let samples: Vec<GrowthSample> = (1..=GROWTH_SAMPLES)
        .map(|i| {
            let x = GROWTH_X_MAX * i as f64 / GROWTH_SAMPLES as f64;
            GrowthSample {
                x,
                at_negative: sign * law.alpha_real(-1.0 / x) / x,
                at_positive: sign * law.alpha_real(1.0 / x) / x,
            }
        })
        .collect();
    let last = samples.last().expect("nonempty sample grid");
    let scale = last.x.powi(r as i32);
    let leading_rate = last.at_negative.max(last.at_positive) / scale;
    GrowthReport { r, branch, trivial, samples, leading_rate, growth_detected: !trivial && leading_rate > 0.0 }
}

impl GrowthReport {
    pub fn verdict(&self) -> &'static str {
        if self.trivial {
            "trivial reflection; no contradiction"
        } else if self.growth_detected {
            "evolution factor grows like exp(c x^(r+1)); nontrivial reflection is incompatible with super-fast decay at both times"
        } else {
            "no growth of the evolution factor detected"
        }
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "r = {}", self.r);
        let _ = writeln!(
            s,
            "branch = {}",
            match self.branch {
                GrowthBranch::Forward => "forward factor exp(alpha_r(k))",
                GrowthBranch::Backward => "backward factor exp(-alpha_r(k))",
            }
        );
        let last = self.samples.last().expect("nonempty sample grid");
        let _ = writeln!(s, "x = {}: log|factor(-1/x)|/x = {}, log|factor(1/x)|/x = {}", last.x, last.at_negative, last.at_positive);
        let _ = writeln!(s, "leading rate log|factor|/x^(r+1) = {}", self.leading_rate);
        let _ = writeln!(s, "verdict: {}", self.verdict());
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,log_factor_over_x_at_neg_inv_x,log_factor_over_x_at_pos_inv_x\n");
        for p in &self.samples {
            let _ = writeln!(s, "{},{},{}", fmt_num(p.x), fmt_num(p.at_negative), fmt_num(p.at_positive));
        }
        s
    }
}
