//! Embedded explicit Runge-Kutta stepping with adaptive step control.
//!
//! Verner's efficient 6(5) pair: the sixth-order solution is propagated and
//! the fifth-order companion drives the error estimate. The last stage is
//! evaluated at the new point with the propagated weights, so it is reused
//! as the first stage of the following step.

use crate::error::{Error, Result};

const STAGES: usize = 9;

#[rustfmt::skip]
const A: [[f64; STAGES]; STAGES] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.6e-1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.923_996_296_296_296_2e-2, 7.669_337_037_037_037e-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.35975e-1, 0.0, 0.107925, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.318_683_415_233_148_4, 0.0, -5.042_058_063_628_562, 4.220_674_648_395_414, 0.0, 0.0, 0.0, 0.0, 0.0],
    [-41.872_591_664_327_516, 0.0, 159.432_562_163_137_5, -122.119_213_565_010_03, 5.531_743_066_200_054, 0.0, 0.0, 0.0, 0.0],
    [-54.430_156_935_316_504, 0.0, 207.067_251_365_018_48, -158.610_813_784_59, 6.991_816_585_950_242, -1.859_723_106_220_323_4e-2, 0.0, 0.0, 0.0],
    [-54.663_741_787_281_98, 0.0, 207.952_806_255_389_36, -159.288_957_474_499_5, 7.018_743_740_796_944, -1.833_878_590_504_572_2e-2, -5.119_484_997_882_099e-4, 0.0, 0.0],
    [3.438_957_868_357_036e-2, 0.0, 0.0, 0.258_262_455_563_350_3, 0.420_937_118_967_353_7, 4.405_396_469_669_31, -176.483_119_024_298_65, 172.364_133_401_415_07, 0.0],
];

#[rustfmt::skip]
const B_HIGH: [f64; STAGES] = [3.438_957_868_357_036e-2, 0.0, 0.0, 0.258_262_455_563_350_3, 0.420_937_118_967_353_7, 4.405_396_469_669_31, -176.483_119_024_298_65, 172.364_133_401_415_07, 0.0];
#[rustfmt::skip]
const B_LOW: [f64; STAGES] = [4.909_967_648_382_49e-2, 0.0, 0.0, 0.225_111_222_951_652_42, 0.469_468_225_302_956_2, 0.806_579_224_998_886_8, 0.0, -0.607_119_489_177_796, 5.686_113_944_047_569_6e-2];

/// Order of the embedded (error-estimating) solution.
const ERROR_ORDER: f64 = 5.0;
const SAFETY: f64 = 0.9;
const MAX_GROWTH: f64 = 5.0;
const MIN_SHRINK: f64 = 0.2;
const MAX_STEPS: usize = 2_000_000;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerances {
    pub rel: f64,
    pub abs: f64,
    pub max_step: f64,
}

/// Scratch space for one embedded step.
struct Stepper {
    k: Vec<Vec<f64>>,
    stage: Vec<f64>,
}

impl Stepper {
    fn new(dim: usize) -> Self {
        Self { k: vec![vec![0.0; dim]; STAGES], stage: vec![0.0; dim] }
    }

    /// Advances `y` by `hs` assuming `k[0] = f(y)`. On success `stage` holds
    /// the sixth-order solution and `k[STAGES-1]` its derivative; returns the
    /// scaled error norm (infinite if a stage left the domain of `rhs`).
    fn step<F>(&mut self, y: &[f64], hs: f64, tol: Tolerances, rhs: &mut F) -> f64
    where
        F: FnMut(&[f64], &mut [f64]) -> Result<()>,
    {
        let dim = y.len();
        for s in 1..STAGES {
            for i in 0..dim {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s][j] * self.k[j][i];
                }
                self.stage[i] = y[i] + hs * acc;
            }
            if rhs(&self.stage, &mut self.k[s]).is_err() {
                return f64::INFINITY;
            }
        }
        // the last stage row equals B_HIGH, so `stage` is the new point
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            let mut e = 0.0;
            for s in 0..STAGES {
                e += (B_HIGH[s] - B_LOW[s]) * self.k[s][i];
            }
            let scale = tol.abs + tol.rel * y[i].abs().max(self.stage[i].abs());
            worst = worst.max((hs * e).abs() / scale);
        }
        if worst.is_finite() && self.stage.iter().all(|v| v.is_finite()) {
            worst
        } else {
            f64::INFINITY
        }
    }
}

/// Integrates `y' = f(y)` from `t0` to `t1` (either direction).
///
/// `rhs` may fail for stage values outside the domain of the field; such a
/// step is rejected and retried with a smaller step. `accept` is called after
/// every accepted step with the new time and state; an error aborts.
pub(crate) fn integrate<F, G>(
    y0: &[f64],
    t0: f64,
    t1: f64,
    tol: Tolerances,
    mut rhs: F,
    mut accept: G,
) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
    G: FnMut(f64, &[f64]) -> Result<()>,
{
    let mut y = y0.to_vec();
    if t1 == t0 {
        return Ok(y);
    }
    let dir = (t1 - t0).signum();
    let mut st = Stepper::new(y.len());
    rhs(&y, &mut st.k[0]).map_err(|e| Error::StepFailure { t: t0, reason: e.to_string() })?;

    let mut h = initial_step(&y, &st.k[0], tol, (t1 - t0).abs());
    let mut t = t0;
    let mut steps = 0;
    while dir * (t1 - t) > 0.0 {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::StepFailure { t, reason: "maximum number of steps exceeded".into() });
        }
        // absorb remainders that would leave a roundoff-sized final step
        let last = h * (1.0 + 1e-8) >= (t1 - t).abs();
        let h_try = if last { (t1 - t).abs() } else { h };
        if h_try < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepFailure { t, reason: format!("step size underflow ({h_try:e})") });
        }
        let err = st.step(&y, dir * h_try, tol, &mut rhs);
        if err <= 1.0 {
            t = if last { t1 } else { t + dir * h_try };
            std::mem::swap(&mut y, &mut st.stage);
            let (first, rest) = st.k.split_at_mut(1);
            first[0].copy_from_slice(&rest[STAGES - 2]);
            accept(t, &y)?;
            let factor = if err == 0.0 {
                MAX_GROWTH
            } else {
                (SAFETY * err.powf(-1.0 / (ERROR_ORDER + 1.0))).clamp(MIN_SHRINK, MAX_GROWTH)
            };
            h = (h_try * factor).min(tol.max_step);
        } else {
            let factor = if err.is_finite() {
                (SAFETY * err.powf(-1.0 / (ERROR_ORDER + 1.0))).clamp(MIN_SHRINK, 1.0)
            } else {
                0.25
            };
            h = h_try * factor;
        }
    }
    Ok(y)
}

fn initial_step(y: &[f64], f: &[f64], tol: Tolerances, span: f64) -> f64 {
    let scale = |v: f64| tol.abs + tol.rel * v.abs();
    let d0 = y.iter().map(|&v| (v / scale(v)).abs()).fold(0.0, f64::max);
    let d1 = y.iter().zip(f).map(|(&v, &g)| (g / scale(v)).abs()).fold(0.0, f64::max);
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(tol.max_step).min(span).max(1e-12)
}
