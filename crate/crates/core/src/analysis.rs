//! Tail sums, super-fast decay checks and the two-time uniqueness witness.
//!
//! A state decays super-fast at time `t` when
//!
//! ```text
//! Σ_{n≥M} (|a(n,t) - a0| + |b(n,t) - b0|) ≤ C M^{-(1+δ) 2M}   for all M > 0.
//! ```
//!
//! Such decay at two distinct times forces the state to be the background.
//! The witness integrates a state between two times and reports which side
//! of that dichotomy the numerics land on.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{integrate, FlowConfig};
use crate::hierarchy::HierarchyCoeffs;
use crate::lattice::{LatticeState, SCHEMA_VERSION};
use crate::output::fmt_num;

/// Tail sums below this are indistinguishable from rounding noise.
pub const NOISE_FLOOR: f64 = 1e-13;

/// Consecutive failing `M` needed before a time counts as not super-fast.
pub const MIN_CONSECUTIVE_FAILURES: usize = 2;

/// `M ↦ C M^{-(1+δ) 2M}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayBound {
    #[serde(rename = "C")]
    c: f64,
    delta: f64,
}

impl DecayBound {
    pub fn new(c: f64, delta: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite() && delta > 0.0 && delta.is_finite()) {
            return Err(Error::Domain(format!("decay bound needs C > 0 and δ > 0, got C = {c}, δ = {delta}")));
        }
        Ok(Self { c, delta })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn value(&self, m: i64) -> f64 {
        let m = m as f64;
        self.c * (-(1.0 + self.delta) * 2.0 * m * m.ln()).exp()
    }

    /// Largest `M` whose bound value is still above [`NOISE_FLOOR`]; the
    /// comparison is vacuous in double precision beyond it.
    pub fn m_max(&self) -> i64 {
        let mut m = 1;
        while self.value(m + 1) >= NOISE_FLOOR {
            m += 1;
        }
        m
    }

    /// Default checking range `[2, m_max]`.
    pub fn default_range(&self) -> RangeInclusive<i64> {
        2..=self.m_max().max(2)
    }
}

/// `Σ_{n≥M} (|a(n) - a0| + |b(n) - b0|)`.
pub fn tail_sum(state: &LatticeState, m: i64) -> f64 {
    (m.max(state.n_min())..=state.n_max()).map(|n| state.deviation(n)).sum()
}

/// `Σ_n |n| (|a(n) - a0| + |b(n) - b0|)`.
pub fn first_moment(state: &LatticeState) -> f64 {
    (state.n_min()..=state.n_max()).map(|n| n.abs() as f64 * state.deviation(n)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRecord {
    #[serde(rename = "M")]
    pub m: i64,
    pub tail_sum: f64,
    pub bound: f64,
    pub satisfied: bool,
}

/// Per-`M` comparison of the tail sum against the bound.
pub fn superfast_check(state: &LatticeState, bound: &DecayBound, m_range: RangeInclusive<i64>) -> Vec<DecayRecord> {
    m_range
        .map(|m| {
            let tail = tail_sum(state, m);
            let b = bound.value(m);
            DecayRecord { m, tail_sum: tail, bound: b, satisfied: tail <= b }
        })
        .collect()
}

pub fn all_satisfied(records: &[DecayRecord]) -> bool {
    records.iter().all(|r| r.satisfied)
}

/// Longest run of consecutive failing `M`.
pub fn longest_failure_run(records: &[DecayRecord]) -> usize {
    let (mut best, mut run) = (0, 0);
    for r in records {
        run = if r.satisfied { 0 } else { run + 1 };
        best = best.max(run);
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayClass {
    Superfast,
    GaussianType,
    Exponential,
    Polynomial,
    None,
}

impl DecayClass {
    pub fn name(self) -> &'static str {
        match self {
            Self::Superfast => "superfast",
            Self::GaussianType => "gaussian-type",
            Self::Exponential => "exponential",
            Self::Polynomial => "polynomial",
            Self::None => "none",
        }
    }

    /// Shape of `-log tail_sum(M)` for each model.
    fn feature(self, m: f64) -> f64 {
        match self {
            Self::Superfast => 2.0 * m * m.ln(),
            Self::GaussianType => m * m,
            Self::Exponential => m,
            Self::Polynomial => m.ln(),
            Self::None => 0.0,
        }
    }
}

/// Least-squares fit `log tail_sum(M) ≈ β0 - rate · feature(M)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelFit {
    pub class: DecayClass,
    pub rate: f64,
    pub rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub class: DecayClass,
    pub fits: Vec<ModelFit>,
    pub points: usize,
}

const MODELS: [DecayClass; 4] =
    [DecayClass::Superfast, DecayClass::GaussianType, DecayClass::Exponential, DecayClass::Polynomial];

/// Picks the tail model with the smallest residual among those with a
/// positive rate. Uses every `M ≥ 1` whose tail sum exceeds [`NOISE_FLOOR`].
pub fn classify_decay(state: &LatticeState) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = (1..=state.n_max())
        .map(|m| (m as f64, tail_sum(state, m)))
        .take_while(|(_, t)| *t > NOISE_FLOOR)
        .map(|(m, t)| (m, t.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientTail(format!(
            "{} tail sums above {NOISE_FLOOR:e}, need at least 3",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let fits: Vec<ModelFit> = MODELS
        .iter()
        .map(|&class| {
            let xs: Vec<f64> = pts.iter().map(|p| class.feature(p.0)).collect();
            let mx = xs.iter().sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
            let sxy: f64 = xs.iter().zip(&pts).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
            let slope = sxy / sxx;
            let rms = (xs.iter().zip(&pts).map(|(x, p)| (my + slope * (x - mx) - p.1).powi(2)).sum::<f64>() / n).sqrt();
            ModelFit { class, rate: -slope, rms }
        })
        .collect();
    let class = fits
        .iter()
        .filter(|f| f.rate > 0.0)
        .min_by(|a, b| a.rms.total_cmp(&b.rms))
        .map_or(DecayClass::None, |f| f.class);
    Ok(DecayFit { class, fits, points: pts.len() })
}

/// Decay diagnostics for one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub t: f64,
    pub records: Vec<DecayRecord>,
    pub first_moment: f64,
    pub fitted_class: DecayClass,
    pub verdict: String,
}

impl DecayReport {
    pub fn new(state: &LatticeState, bound: &DecayBound, m_range: RangeInclusive<i64>) -> Self {
        let records = superfast_check(state, bound, m_range);
        let fitted_class = classify_decay(state).map_or(DecayClass::None, |f| f.class);
        let failing: Vec<i64> = records.iter().filter(|r| !r.satisfied).map(|r| r.m).collect();
        let verdict = if failing.is_empty() {
            "super-fast on the checked range".to_string()
        } else {
            format!(
                "bound fails at M = {:?} (longest consecutive run {})",
                failing,
                longest_failure_run(&records)
            )
        };
        Self { t: state.t(), records, first_moment: first_moment(state), fitted_class, verdict }
    }

    pub fn superfast(&self) -> bool {
        all_satisfied(&self.records)
    }
}

#[derive(Debug, Clone)]
pub struct TheoremScenario {
    pub t0: f64,
    pub t1: f64,
    pub initial: LatticeState,
    pub coeffs: HierarchyCoeffs,
    pub bound: DecayBound,
    /// Defaults to [`DecayBound::default_range`].
    pub m_range: Option<RangeInclusive<i64>>,
}

impl TheoremScenario {
    /// `t0 = 0`, `t1 = 1`, default range.
    pub fn new(initial: LatticeState, coeffs: HierarchyCoeffs, bound: DecayBound) -> Self {
        Self { t0: 0.0, t1: 1.0, initial, coeffs, bound, m_range: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// Super-fast at both times and the state is the background.
    #[serde(rename = "i")]
    Trivial,
    /// Super-fast at `t0`, not super-fast at `t1`.
    #[serde(rename = "ii")]
    DichotomyExhibited,
    /// Not super-fast at `t0`.
    #[serde(rename = "iii")]
    HypothesisNotMet,
}

impl Verdict {
    pub fn text(self) -> &'static str {
        match self {
            Self::Trivial => "trivial: both times superfast, state is constant",
            Self::DichotomyExhibited => "dichotomy exhibited: superfast at t0, not superfast at t1",
            Self::HypothesisNotMet => "hypothesis not met at t0",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessOutcome {
    pub t0: DecayReport,
    pub t1: DecayReport,
    pub verdict: Verdict,
}

/// Integrates the scenario from `t0` to `t1` and classifies the outcome.
///
/// A time counts as not super-fast only when the bound fails at
/// [`MIN_CONSECUTIVE_FAILURES`] consecutive `M`. Super-fast decay at both
/// times for a state that is not exactly the background is reported as a
/// numerical contradiction rather than as a verdict.
pub fn theorem_witness(scenario: &TheoremScenario, config: &FlowConfig) -> Result<WitnessOutcome> {
    if !(scenario.t0 < scenario.t1) {
        return Err(Error::Domain(format!("need t0 < t1, got {} and {}", scenario.t0, scenario.t1)));
    }
    let range = scenario.m_range.clone().unwrap_or_else(|| scenario.bound.default_range());
    if *range.start() < 1 {
        return Err(Error::Domain("M range must start at 1 or later".into()));
    }
    let start = scenario.initial.clone().with_time(scenario.t0);
    let end = integrate(&start, &scenario.coeffs, scenario.t1, config)?.into_last();
    let r0 = DecayReport::new(&start, &scenario.bound, range.clone());
    let r1 = DecayReport::new(&end, &scenario.bound, range);

    let verdict = if !r0.superfast() {
        Verdict::HypothesisNotMet
    } else if longest_failure_run(&r1.records) >= MIN_CONSECUTIVE_FAILURES {
        Verdict::DichotomyExhibited
    } else if start.is_background() {
        Verdict::Trivial
    } else {
        return Err(Error::NumericalContradiction(format!(
            "nonconstant state is super-fast at t0 = {} and t1 = {} on M ∈ [{}, {}]",
            scenario.t0,
            scenario.t1,
            r1.records.first().map_or(0, |r| r.m),
            r1.records.last().map_or(0, |r| r.m)
        )));
    };
    Ok(WitnessOutcome { t0: r0, t1: r1, verdict })
}

impl WitnessOutcome {
    pub fn to_json(&self, scenario: &TheoremScenario) -> String {
        #[derive(Serialize)]
        struct File<'a> {
            schema_version: u32,
            r: usize,
            bound: DecayBound,
            reports: [&'a DecayReport; 2],
            verdict: Verdict,
            verdict_text: &'static str,
        }
        serde_json::to_string_pretty(&File {
            schema_version: SCHEMA_VERSION,
            r: scenario.coeffs.r(),
            bound: scenario.bound,
            reports: [&self.t0, &self.t1],
            verdict: self.verdict,
            verdict_text: self.verdict.text(),
        })
        .expect("report serializes")
    }

    /// `M, tail_t0, tail_t1, bound` per checked `M`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("M,tail_t0,tail_t1,bound\n");
        for (a, b) in self.t0.records.iter().zip(&self.t1.records) {
            let _ = writeln!(s, "{},{},{},{}", a.m, fmt_num(a.tail_sum), fmt_num(b.tail_sum), fmt_num(a.bound));
        }
        s
    }
}
