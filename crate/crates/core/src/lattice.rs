//! Lattice states over ℤ stored on a finite window.
//!
//! A [`LatticeState`] holds the coefficients `a(n), b(n)` for
//! `n_min <= n < n_min + len`; every site outside the window carries the
//! constant background `(a0, b0)`. All accessors are total over ℤ.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Version tag written into every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;

/// Default absolute tolerance for element-wise state comparison.
pub const STATE_EQ_TOL: f64 = 1e-12;

/// Toda coefficients `(a, b)` on a window with constant background.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    n_min: i64,
    a: Vec<f64>,
    b: Vec<f64>,
    a0: f64,
    b0: f64,
    t: f64,
}

impl LatticeState {
    pub fn new(n_min: i64, a: Vec<f64>, b: Vec<f64>, a0: f64, b0: f64, t: f64) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::InvalidState(format!(
                "a and b differ in length ({} vs {})",
                a.len(),
                b.len()
            )));
        }
        if a.is_empty() {
            return Err(Error::InvalidState("empty window".into()));
        }
        if !(a0 > 0.0) || !a0.is_finite() {
            return Err(Error::InvalidState(format!("background a0 = {a0} must be positive")));
        }
        if !b0.is_finite() || !t.is_finite() {
            return Err(Error::InvalidState("non-finite background or time".into()));
        }
        if let Some((i, &v)) = a.iter().enumerate().find(|(_, &v)| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidState(format!(
                "a({}) = {v} is not a positive finite number",
                n_min + i as i64
            )));
        }
        if let Some((i, _)) = b.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidState(format!("b({}) is not finite", n_min + i as i64)));
        }
        Ok(Self { n_min, a, b, a0, b0, t })
    }

    /// Skips validation; for integrator stages whose values are checked later.
    pub(crate) fn from_parts_unchecked(n_min: i64, a: Vec<f64>, b: Vec<f64>, a0: f64, b0: f64, t: f64) -> Self {
        Self { n_min, a, b, a0, b0, t }
    }

    /// Constant state equal to the background on `len` sites starting at `n_min`.
    pub fn constant(n_min: i64, len: usize, a0: f64, b0: f64, t: f64) -> Result<Self> {
        Self::new(n_min, vec![a0; len], vec![b0; len], a0, b0, t)
    }

    /// Builds a state on `n_min..=n_max` from a site function returning `(a(n), b(n))`.
    pub fn from_fn<F>(n_min: i64, n_max: i64, a0: f64, b0: f64, t: f64, mut f: F) -> Result<Self>
    where
        F: FnMut(i64) -> (f64, f64),
    {
        if n_max < n_min {
            return Err(Error::InvalidState(format!("empty window {n_min}..={n_max}")));
        }
        let (a, b) = (n_min..=n_max).map(&mut f).unzip();
        Self::new(n_min, a, b, a0, b0, t)
    }

    pub fn n_min(&self) -> i64 {
        self.n_min
    }

    /// Last site of the window (inclusive).
    pub fn n_max(&self) -> i64 {
        self.n_min + self.a.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn a_values(&self) -> &[f64] {
        &self.a
    }

    pub fn b_values(&self) -> &[f64] {
        &self.b
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    fn index(&self, n: i64) -> Option<usize> {
        let i = n.checked_sub(self.n_min)?;
        (0..self.a.len() as i64).contains(&i).then_some(i as usize)
    }

    /// `(a(n), b(n))` for any `n ∈ ℤ`.
    pub fn access(&self, n: i64) -> (f64, f64) {
        match self.index(n) {
            Some(i) => (self.a[i], self.b[i]),
            None => (self.a0, self.b0),
        }
    }

    #[inline]
    pub fn a(&self, n: i64) -> f64 {
        self.index(n).map_or(self.a0, |i| self.a[i])
    }

    #[inline]
    pub fn b(&self, n: i64) -> f64 {
        self.index(n).map_or(self.b0, |i| self.b[i])
    }

    /// `|a(n) - a0| + |b(n) - b0|`.
    pub fn deviation(&self, n: i64) -> f64 {
        let (a, b) = self.access(n);
        (a - self.a0).abs() + (b - self.b0).abs()
    }

    /// First and last window sites whose deviation exceeds `threshold`.
    pub fn support(&self, threshold: f64) -> Option<(i64, i64)> {
        let dev = |i: usize| (self.a[i] - self.a0).abs() + (self.b[i] - self.b0).abs();
        let first = (0..self.len()).find(|&i| dev(i) > threshold)?;
        let last = (0..self.len()).rev().find(|&i| dev(i) > threshold)?;
        Some((self.n_min + first as i64, self.n_min + last as i64))
    }

    /// Number of background sites between the perturbation and the nearest
    /// window edge. A state without deviations above `threshold` reports the
    /// window length.
    pub fn tail_margin(&self, threshold: f64) -> i64 {
        match self.support(threshold) {
            Some((lo, hi)) => (lo - self.n_min).min(self.n_max() - hi),
            None => self.len() as i64,
        }
    }

    /// True when every window site equals the background exactly.
    pub fn is_background(&self) -> bool {
        self.a.iter().all(|&v| v == self.a0) && self.b.iter().all(|&v| v == self.b0)
    }

    /// Rescales to the background `(1/2, 0)` via `H -> (H - b0) / (2 a0)`.
    pub fn normalize(&self) -> Result<Self> {
        if !(self.a0 > 0.0) {
            return Err(Error::InvalidState(format!("a0 = {} must be positive", self.a0)));
        }
        let s = 2.0 * self.a0;
        let a = self.a.iter().map(|&v| v / s).collect();
        let b = self.b.iter().map(|&v| (v - self.b0) / s).collect();
        Self::new(self.n_min, a, b, 0.5, 0.0, self.t)
    }

    pub fn is_normalized(&self) -> bool {
        self.a0 == 0.5 && self.b0 == 0.0
    }

    /// Half-line reflection `ã(n) = a(-n-1)`, `b̃(n) = b(-n)`, `t -> -t`.
    ///
    /// The reflected window is one site longer than the original since the
    /// two index maps differ by a shift.
    pub fn reflect(&self) -> Self {
        let n_min = -(self.n_max() + 1);
        let n_max = -self.n_min;
        let (a, b) = (n_min..=n_max).map(|m| (self.a(-m - 1), self.b(-m))).unzip();
        Self { n_min, a, b, a0: self.a0, b0: self.b0, t: -self.t }
    }

    /// Element-wise comparison over the union of both windows, including
    /// backgrounds and time stamps.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if (self.a0 - other.a0).abs() > tol
            || (self.b0 - other.b0).abs() > tol
            || (self.t - other.t).abs() > tol
        {
            return false;
        }
        self.max_abs_diff(other) <= tol
    }

    /// Sup-norm difference of the coefficients over the union of both windows.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let lo = self.n_min.min(other.n_min);
        let hi = self.n_max().max(other.n_max());
        (lo..=hi)
            .map(|n| {
                let (a1, b1) = self.access(n);
                let (a2, b2) = other.access(n);
                (a1 - a2).abs().max((b1 - b2).abs())
            })
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&StateFile::from(self)).expect("state serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: StateFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk JSON layout of a [`LatticeState`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub n_min: i64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub a0: f64,
    pub b0: f64,
    pub t: f64,
}

pub(crate) fn default_schema() -> u32 {
    SCHEMA_VERSION
}

pub(crate) fn check_schema(v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(Error::Schema(format!("unsupported schema_version {v}, expected {SCHEMA_VERSION}")));
    }
    Ok(())
}

impl From<&LatticeState> for StateFile {
    fn from(s: &LatticeState) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            n_min: s.n_min,
            a: s.a.clone(),
            b: s.b.clone(),
            a0: s.a0,
            b0: s.b0,
            t: s.t,
        }
    }
}

impl TryFrom<StateFile> for LatticeState {
    type Error = Error;

    fn try_from(f: StateFile) -> Result<Self> {
        check_schema(f.schema_version)?;
        LatticeState::new(f.n_min, f.a, f.b, f.a0, f.b0, f.t)
    }
}

/// Kac-van Moerbeke state: a single positive sequence `ρ` with background `ρ0`.
#[derive(Debug, Clone, PartialEq)]
pub struct KvMState {
    n_min: i64,
    rho: Vec<f64>,
    rho0: f64,
    t: f64,
}

impl KvMState {
    pub fn new(n_min: i64, rho: Vec<f64>, rho0: f64, t: f64) -> Result<Self> {
        if rho.is_empty() {
            return Err(Error::InvalidState("empty window".into()));
        }
        if !(rho0 > 0.0) || !rho0.is_finite() || !t.is_finite() {
            return Err(Error::InvalidState(format!("background rho0 = {rho0} must be positive")));
        }
        if let Some((i, &v)) = rho.iter().enumerate().find(|(_, &v)| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidState(format!(
                "rho({}) = {v} is not a positive finite number",
                n_min + i as i64
            )));
        }
        Ok(Self { n_min, rho, rho0, t })
    }

    pub fn n_min(&self) -> i64 {
        self.n_min
    }

    pub fn n_max(&self) -> i64 {
        self.n_min + self.rho.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.rho
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    #[inline]
    pub fn rho(&self, n: i64) -> f64 {
        let i = n - self.n_min;
        if (0..self.rho.len() as i64).contains(&i) {
            self.rho[i as usize]
        } else {
            self.rho0
        }
    }

    pub fn tail_margin(&self, threshold: f64) -> i64 {
        let dev = |i: &usize| (self.rho[*i] - self.rho0).abs() > threshold;
        let first = (0..self.len()).find(dev);
        let last = (0..self.len()).rev().find(dev);
        match (first, last) {
            (Some(lo), Some(hi)) => (lo as i64).min((self.len() - 1 - hi) as i64),
            _ => self.len() as i64,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&KvMFile::from(self)).expect("state serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: KvMFile = serde_json::from_str(text)?;
        check_schema(f.schema_version)?;
        Self::new(f.n_min, f.rho, f.rho0, f.t)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KvMFile {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub n_min: i64,
    pub rho: Vec<f64>,
    pub rho0: f64,
    pub t: f64,
}

impl From<&KvMState> for KvMFile {
    fn from(s: &KvMState) -> Self {
        Self { schema_version: SCHEMA_VERSION, n_min: s.n_min, rho: s.rho.clone(), rho0: s.rho0, t: s.t }
    }
}
