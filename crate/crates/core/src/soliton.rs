//! Reflectionless (pure soliton) solutions on the background `(1/2, 0)`.
//!
//! Each bound state is inserted into the current operator by a double
//! commutation step. With `u` the solution of `H u = λ u` that behaves like
//! `k^n` at `+∞` and
//!
//! ```text
//! c(n) = 1 + γ Σ_{j>n} u(j)²,
//! ```
//!
//! the new coefficients are
//!
//! ```text
//! a'(n) = a(n) √(c(n-1) c(n+1)) / c(n),
//! b'(n) = b(n) - γ [a(n) u(n) u(n+1) / c(n) - a(n-1) u(n-1) u(n) / c(n-1)].
//! ```
//!
//! `u` grows exponentially to the left, so the step is carried out on the
//! ratios `u(n+1)/u(n)` and on `q(n) = γ u(n)² / c(n)` kept in log form.

use crate::error::{Error, Result};
use crate::lattice::LatticeState;

/// Largest edge weight `|k|^{2·margin}` accepted by [`build_soliton`].
pub const EDGE_WEIGHT_TOL: f64 = 1e-14;

/// Tail-fit window for [`tail_rate`].
pub const TAIL_FIT_RANGE: (f64, f64) = (1e-12, 1e-4);

/// One inserted eigenvalue `λ = (k + 1/k)/2` with norming constant `γ_+`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitonParams {
    pub k: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolitonSpec {
    bound_states: Vec<SolitonParams>,
    t: f64,
}

impl SolitonSpec {
    pub fn new(bound_states: Vec<SolitonParams>, t: f64) -> Result<Self> {
        for (i, p) in bound_states.iter().enumerate() {
            if !(p.k.abs() < 1.0) || p.k == 0.0 {
                return Err(Error::InvalidState(format!("k = {} must satisfy 0 < |k| < 1", p.k)));
            }
            if !(p.gamma > 0.0) || !p.gamma.is_finite() {
                return Err(Error::InvalidState(format!("gamma = {} must be positive", p.gamma)));
            }
            if bound_states[..i].iter().any(|q| q.k == p.k) {
                return Err(Error::InvalidState(format!("k = {} appears twice", p.k)));
            }
        }
        if !t.is_finite() {
            return Err(Error::InvalidState("non-finite time".into()));
        }
        Ok(Self { bound_states, t })
    }

    pub fn single(k: f64, gamma: f64) -> Result<Self> {
        Self::new(vec![SolitonParams { k, gamma }], 0.0)
    }

    pub fn bound_states(&self) -> &[SolitonParams] {
        &self.bound_states
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Same bound states with `γ_l ↦ γ_l e^{α(k_l) dt}` and time `t + dt`.
    pub fn evolved(&self, alpha: impl Fn(f64) -> f64, dt: f64) -> Self {
        Self {
            bound_states: self
                .bound_states
                .iter()
                .map(|p| SolitonParams { k: p.k, gamma: p.gamma * (alpha(p.k) * dt).exp() })
                .collect(),
            t: self.t + dt,
        }
    }
}

/// Site where `γ k^{2n} / (1 - k²) = 1`, the centre of a lone soliton.
pub fn soliton_center(p: SolitonParams) -> f64 {
    ((1.0 - p.k * p.k) / p.gamma).ln() / (2.0 * p.k.abs().ln())
}

/// Pure soliton state on `n_min..=n_max`, stamped with `spec.t()`.
pub fn build_soliton(spec: &SolitonSpec, n_min: i64, n_max: i64) -> Result<LatticeState> {
    if n_max < n_min {
        return Err(Error::WindowTooSmall(format!("empty window {n_min}..={n_max}")));
    }
    for p in &spec.bound_states {
        let c = soliton_center(*p);
        let margin = (c - n_min as f64).min(n_max as f64 - c);
        let weight = margin.max(0.0) * 2.0 * p.k.abs().ln();
        if weight > EDGE_WEIGHT_TOL.ln() {
            return Err(Error::WindowTooSmall(format!(
                "k = {} centred at n = {c:.1} needs |k|^(2·margin) < {EDGE_WEIGHT_TOL:e}; margin is {margin:.1}",
                p.k
            )));
        }
    }
    let len = (n_max - n_min + 1) as usize;
    let mut state = LatticeState::constant(n_min, len, 0.5, 0.0, spec.t)?;
    for p in &spec.bound_states {
        state = double_commute(&state, *p)?;
    }
    Ok(state)
}

fn double_commute(state: &LatticeState, p: SolitonParams) -> Result<LatticeState> {
    let (n_min, n_max) = (state.n_min(), state.n_max());
    let k = p.k;
    let lambda = 0.5 * (k + 1.0 / k);
    // index i ↔ site n_min - 1 + i, covering n_min-1..=n_max+1
    let len = (n_max - n_min + 3) as usize;
    let at = |n: i64| (n - n_min + 1) as usize;

    // u(n) = k^n exactly from n0 on, since the state is free beyond its support
    let n0 = match state.support(0.0) {
        Some((_, hi)) => (hi + 2).min(n_max + 1),
        None => n_min - 1,
    };
    let lnk = k.abs().ln();
    let ln_gamma = p.gamma.ln();
    let mut ratio = vec![k; len];
    let mut lq = vec![0.0; len];
    for n in n0..=(n_max + 1) {
        // q = γ k^{2n} / (1 + e^x) with e^x = γ k^{2n+2} / (1 - k²)
        let x = ln_gamma + 2.0 * (n + 1) as f64 * lnk - (1.0 - k * k).ln();
        lq[at(n)] = (1.0 - k * k).ln() - 2.0 * lnk - softplus(-x);
    }
    for n in (n_min..=n0).rev() {
        ratio[at(n - 1)] = state.a(n - 1) / (lambda - state.b(n) - state.a(n) * ratio[at(n)]);
        lq[at(n - 1)] = lq[at(n)] - 2.0 * ratio[at(n - 1)].abs().ln() - softplus(lq[at(n)]);
    }
    let q: Vec<f64> = lq.iter().map(|v| v.exp()).collect();
    let pw: Vec<f64> = q.iter().zip(&ratio).map(|(q, r)| q * r).collect();

    let a = (n_min..=n_max).map(|n| state.a(n) * ((1.0 + q[at(n)]) / (1.0 + q[at(n + 1)])).sqrt()).collect();
    let b = (n_min..=n_max)
        .map(|n| state.b(n) - state.a(n) * pw[at(n)] + state.a(n - 1) * pw[at(n - 1)])
        .collect();
    LatticeState::new(n_min, a, b, 0.5, 0.0, state.t())
        .map_err(|e| Error::Domain(format!("double commutation at k = {k} broke down: {e}")))
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Least-squares slopes of `log|a(n) - a0|` against `2|n|` on each side of
/// the peak, restricted to deviations inside [`TAIL_FIT_RANGE`].
///
/// Returns `(rate_plus, rate_minus)`; for an `N`-soliton both approach
/// `log|k|` of the bound state closest to the band.
pub fn tail_rate(state: &LatticeState) -> Result<(f64, f64)> {
    let dev = |n: i64| (state.a(n) - state.a0()).abs();
    let peak = (state.n_min()..=state.n_max())
        .max_by(|&x, &y| dev(x).total_cmp(&dev(y)))
        .expect("window is nonempty");
    let fit = |sites: Vec<i64>, side: &str| -> Result<f64> {
        let pts: Vec<(f64, f64)> = sites
            .into_iter()
            .filter(|&n| dev(n) > TAIL_FIT_RANGE.0 && dev(n) < TAIL_FIT_RANGE.1)
            .map(|n| (2.0 * n.abs() as f64, dev(n).ln()))
            .collect();
        if pts.len() < 3 {
            return Err(Error::InsufficientTail(format!(
                "{} usable sites on the {side} tail, need at least 3",
                pts.len()
            )));
        }
        let m = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
        let (mx, my) = (sx / m, sy / m);
        let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + (p.0 - mx) * (p.1 - my), b + (p.0 - mx).powi(2)));
        Ok(sxy / sxx)
    };
    let plus = fit(((peak + 1)..=state.n_max()).collect(), "right")?;
    let minus = fit((state.n_min()..peak).collect(), "left")?;
    Ok((plus, minus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{build_jacobi, default_k_grid, scattering_data};
    use nalgebra::DMatrix;

    /// Closed determinant form of the N-soliton, used as an oracle.
    fn determinant_soliton(ps: &[SolitonParams], n_min: i64, n_max: i64) -> (Vec<f64>, Vec<f64>) {
        let nb = ps.len();
        let c = |n: i64| {
            DMatrix::from_fn(nb, nb, |i, j| {
                let (ki, kj) = (ps[i].k, ps[j].k);
                let d = if i == j { 1.0 } else { 0.0 };
                d + (ps[i].gamma * ps[j].gamma).sqrt() * (ki * kj).powi((n + 1) as i32) / (1.0 - ki * kj)
            })
        };
        let phi = |n: i64| nalgebra::DVector::from_fn(nb, |j, _| ps[j].gamma.sqrt() * ps[j].k.powi(n as i32));
        let q = |n: i64| 0.5 * phi(n + 1).dot(&c(n).lu().solve(&phi(n)).unwrap());
        let det = |n: i64| c(n).determinant();
        let a = (n_min..=n_max).map(|n| 0.5 * (det(n - 1) * det(n + 1)).sqrt() / det(n)).collect();
        let b = (n_min..=n_max).map(|n| q(n - 1) - q(n)).collect();
        (a, b)
    }

    fn params(list: &[(f64, f64)]) -> Vec<SolitonParams> {
        list.iter().map(|&(k, gamma)| SolitonParams { k, gamma }).collect()
    }

    #[test]
    fn empty_spec_gives_the_background() {
        let s = build_soliton(&SolitonSpec::new(vec![], 0.0).unwrap(), -10, 10).unwrap();
        assert!(s.is_background() && s.is_normalized());
    }

    #[test]
    fn agrees_with_determinant_formula() {
        for list in [
            vec![(0.5, 1.0)],
            vec![(0.6, 1.0), (0.3, 2.0)],
            vec![(0.3, 2.0), (0.6, 1.0)],
            vec![(0.7, 0.5), (0.5, 1.0), (-0.4, 2.0)],
        ] {
            let ps = params(&list);
            let s = build_soliton(&SolitonSpec::new(ps.clone(), 0.0).unwrap(), -60, 60).unwrap();
            let (a, b) = determinant_soliton(&ps, -60, 60);
            let da = s.a_values().iter().zip(&a).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            let db = s.b_values().iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(da < 1e-12 && db < 1e-12, "{list:?}: {da:e} {db:e}");
        }
    }

    #[test]
    fn one_soliton_is_reflectionless_with_expected_eigenvalue() {
        let s = build_soliton(&SolitonSpec::single(0.5, 1.0).unwrap(), -200, 200).unwrap();
        let h = build_jacobi(&s).unwrap();
        let sd = scattering_data(&h, &default_k_grid(64), 401).unwrap();
        assert!(sd.is_reflectionless(1e-8));
        assert_eq!(sd.bound_states.len(), 1);
        assert!((sd.bound_states[0].lambda - 1.25).abs() < 1e-12);
        assert!((sd.bound_states[0].gamma_plus - 1.0).abs() < 1e-10);
    }

    #[test]
    fn large_windows_do_not_overflow() {
        let s = build_soliton(&SolitonSpec::single(0.2, 1.0).unwrap(), -1500, 1500).unwrap();
        assert!(s.a_values().iter().chain(s.b_values()).all(|v| v.is_finite()));
        let small = build_soliton(&SolitonSpec::single(0.2, 1.0).unwrap(), -30, 30).unwrap();
        assert!(s.max_abs_diff(&small) < 1e-14);
    }

    #[test]
    fn window_too_small_is_reported() {
        let spec = SolitonSpec::single(0.9, 1.0).unwrap();
        assert!(matches!(build_soliton(&spec, -50, 50), Err(Error::WindowTooSmall(_))));
        assert!(build_soliton(&spec, -200, 200).is_ok());
        // a far-shifted centre also counts
        let spec = SolitonSpec::single(0.5, 1e-30).unwrap();
        assert!(matches!(build_soliton(&spec, -40, 40), Err(Error::WindowTooSmall(_))));
    }

    #[test]
    fn spec_validation() {
        assert!(SolitonSpec::single(1.0, 1.0).is_err());
        assert!(SolitonSpec::single(0.0, 1.0).is_err());
        assert!(SolitonSpec::single(0.5, 0.0).is_err());
        assert!(SolitonSpec::new(params(&[(0.5, 1.0), (0.5, 2.0)]), 0.0).is_err());
    }

    #[test]
    fn tail_rates() {
        let s = build_soliton(&SolitonSpec::single(0.5, 1.0).unwrap(), -200, 200).unwrap();
        let (p, m) = tail_rate(&s).unwrap();
        let target = 0.5f64.ln();
        assert!(((p - target) / target).abs() < 0.01 && ((m - target) / target).abs() < 0.01, "{p} {m}");

        let s = build_soliton(&SolitonSpec::new(params(&[(0.6, 1.0), (0.3, 1.0)]), 0.0).unwrap(), -200, 200).unwrap();
        let (p, m) = tail_rate(&s).unwrap();
        let target = 0.6f64.ln();
        assert!(((p - target) / target).abs() < 0.01 && ((m - target) / target).abs() < 0.01, "{p} {m}");

        let s = LatticeState::constant(-20, 41, 0.5, 0.0, 0.0).unwrap();
        assert!(matches!(tail_rate(&s), Err(Error::InsufficientTail(_))));
    }
}
