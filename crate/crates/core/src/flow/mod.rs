//! Time integration of the `TL_r` and KvM flows with conservation monitoring.

mod rk;

use crate::error::{Error, Result};
use crate::hierarchy::{kvm_field, tl_field, trace_invariants, HierarchyCoeffs};
use crate::lattice::{KvMState, LatticeState};
use crate::output::fmt_num;

/// Integrator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Minimum number of background sites between the perturbation and
    /// either window edge.
    pub guard_band: i64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, max_step: 0.1, guard_band: 8 }
    }
}

impl FlowConfig {
    fn validate(&self, r: usize) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.max_step > 0.0) {
            return Err(Error::Domain("tolerances and max_step must be positive".into()));
        }
        if self.guard_band < r as i64 + 2 {
            return Err(Error::Domain(format!("guard band {} below r + 2 = {}", self.guard_band, r + 2)));
        }
        Ok(())
    }

    /// Deviation above which a site counts as perturbed.
    pub fn tail_threshold(&self) -> f64 {
        10.0 * self.abs_tol
    }

    fn tolerances(&self) -> rk::Tolerances {
        rk::Tolerances { rel: self.rel_tol, abs: self.abs_tol, max_step: self.max_step }
    }
}

/// Diagnostics logged at every accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationRecord {
    pub t: f64,
    /// `tr(H^k) - tr(H_bg^k)` for `k = 1..=4`.
    pub traces: [f64; 4],
    pub min_a: f64,
    pub tail_margin: i64,
}

impl ConservationRecord {
    fn of(state: &LatticeState, threshold: f64) -> Self {
        Self {
            t: state.t(),
            traces: trace_invariants(state),
            min_a: state.a_values().iter().copied().fold(f64::INFINITY, f64::min).min(state.a0()),
            tail_margin: state.tail_margin(threshold),
        }
    }

    pub const CSV_HEADER: &'static str = "t,tr1,tr2,tr3,tr4,min_a,tail_margin";

    pub fn csv_row(&self) -> String {
        let [t1, t2, t3, t4] = self.traces.map(fmt_num);
        format!("{},{t1},{t2},{t3},{t4},{},{}", fmt_num(self.t), fmt_num(self.min_a), self.tail_margin)
    }
}

/// States at every accepted step, starting with the initial state.
#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub states: Vec<S>,
    pub log: Vec<ConservationRecord>,
}

impl<S> Trajectory<S> {
    pub fn last(&self) -> &S {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn into_last(mut self) -> S {
        self.states.pop().expect("trajectory holds the initial state")
    }

    /// Largest drift of each trace invariant relative to the initial record.
    pub fn max_trace_drift(&self) -> [f64; 4] {
        let first = self.log[0].traces;
        let mut out = [0.0f64; 4];
        for rec in &self.log {
            for k in 0..4 {
                out[k] = out[k].max((rec.traces[k] - first[k]).abs());
            }
        }
        out
    }

    pub fn conservation_csv(&self) -> String {
        let mut s = String::from(ConservationRecord::CSV_HEADER);
        s.push('\n');
        for rec in &self.log {
            s.push_str(&rec.csv_row());
            s.push('\n');
        }
        s
    }
}

fn check_guard(margin: i64, config: &FlowConfig, t: f64) -> Result<()> {
    if margin < config.guard_band {
        return Err(Error::GuardBand { t, margin, required: config.guard_band });
    }
    Ok(())
}

/// Integrates `TL_r` from `state.t()` to `t_final`.
pub fn integrate(
    state: &LatticeState,
    coeffs: &HierarchyCoeffs,
    t_final: f64,
    config: &FlowConfig,
) -> Result<Trajectory<LatticeState>> {
    config.validate(coeffs.r())?;
    let threshold = config.tail_threshold();
    check_guard(state.tail_margin(threshold), config, state.t())?;

    let len = state.len();
    let (n_min, a0, b0) = (state.n_min(), state.a0(), state.b0());
    let split = |y: &[f64], t: f64| {
        LatticeState::from_parts_unchecked(n_min, y[..len].to_vec(), y[len..].to_vec(), a0, b0, t)
    };

    let mut y0 = state.a_values().to_vec();
    y0.extend_from_slice(state.b_values());

    let mut traj = Trajectory { states: vec![state.clone()], log: vec![ConservationRecord::of(state, threshold)] };
    let rhs = |y: &[f64], dy: &mut [f64]| -> Result<()> {
        if y[..len].iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Domain("a(n) left the positive half-line".into()));
        }
        let (ad, bd) = tl_field(&split(y, 0.0), coeffs);
        dy[..len].copy_from_slice(&ad);
        dy[len..].copy_from_slice(&bd);
        Ok(())
    };
    rk::integrate(&y0, state.t(), t_final, config.tolerances(), rhs, |t, y| {
        let s = LatticeState::new(n_min, y[..len].to_vec(), y[len..].to_vec(), a0, b0, t)
            .map_err(|e| Error::StepFailure { t, reason: e.to_string() })?;
        let rec = ConservationRecord::of(&s, threshold);
        check_guard(rec.tail_margin, config, t)?;
        traj.states.push(s);
        traj.log.push(rec);
        Ok(())
    })?;
    Ok(traj)
}

/// Integrates the Kac-van Moerbeke lattice from `state.t()` to `t_final`.
///
/// The conservation log records the trace invariants of the embedded Jacobi
/// operator `(a, b) = (ρ, 0)`.
pub fn integrate_kvm(state: &KvMState, t_final: f64, config: &FlowConfig) -> Result<Trajectory<KvMState>> {
    config.validate(1)?;
    let threshold = config.tail_threshold();
    check_guard(state.tail_margin(threshold), config, state.t())?;
    let (n_min, rho0) = (state.n_min(), state.rho0());
    let record = |s: &KvMState| {
        let embedded = LatticeState::from_parts_unchecked(
            s.n_min(),
            s.values().to_vec(),
            vec![0.0; s.len()],
            s.rho0(),
            0.0,
            s.t(),
        );
        ConservationRecord::of(&embedded, threshold)
    };
    let mut traj = Trajectory { states: vec![state.clone()], log: vec![record(state)] };
    let rhs = |y: &[f64], dy: &mut [f64]| -> Result<()> {
        let s = KvMState::new(n_min, y.to_vec(), rho0, 0.0)?;
        dy.copy_from_slice(&kvm_field(&s));
        Ok(())
    };
    rk::integrate(state.values(), state.t(), t_final, config.tolerances(), rhs, |t, y| {
        let s = KvMState::new(n_min, y.to_vec(), rho0, t).map_err(|e| Error::StepFailure { t, reason: e.to_string() })?;
        let rec = record(&s);
        check_guard(rec.tail_margin, config, t)?;
        traj.states.push(s);
        traj.log.push(rec);
        Ok(())
    })?;
    Ok(traj)
}
