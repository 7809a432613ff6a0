#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use toda_lab::lattice::{KvMState, LatticeState};

pub const A0: f64 = 0.5;

/// Random perturbation of the background `(1/2, 0)` supported on
/// `support`, inside the window `n_min..=n_max`.
pub fn random_compact(rng: &mut ChaCha8Rng, n_min: i64, n_max: i64, support: (i64, i64), amp: f64) -> LatticeState {
    LatticeState::from_fn(n_min, n_max, A0, 0.0, 0.0, |n| {
        if (support.0..=support.1).contains(&n) {
            (A0 + amp * rng.gen_range(-1.0..1.0), amp * rng.gen_range(-1.0..1.0))
        } else {
            (A0, 0.0)
        }
    })
    .unwrap()
}

/// `e^{-n²}` profile split between `a` and `b` by `mix`.
pub fn gaussian_state(amp: f64, mix: f64, n_min: i64, n_max: i64) -> LatticeState {
    LatticeState::from_fn(n_min, n_max, A0, 0.0, 0.0, |n| {
        let g = (-((n * n) as f64)).exp();
        (A0 + amp * mix * g, amp * (1.0 - mix) * g)
    })
    .unwrap()
}

/// Random `ρ` on `len` central sites of a window padded by `pad` sites.
pub fn random_kvm(rng: &mut ChaCha8Rng, len: usize, pad: usize, rho0: f64) -> KvMState {
    let total = len + 2 * pad;
    let rho = (0..total)
        .map(|i| if (pad..pad + len).contains(&i) { rho0 * rng.gen_range(0.6..1.6) } else { rho0 })
        .collect();
    KvMState::new(-(total as i64) / 2, rho, rho0, 0.0).unwrap()
}

/// Toda equations written out site by site.
pub fn toda_rhs(s: &LatticeState) -> (Vec<f64>, Vec<f64>) {
    (s.n_min()..=s.n_max())
        .map(|n| (s.a(n) * (s.b(n + 1) - s.b(n)), 2.0 * (s.a(n).powi(2) - s.a(n - 1).powi(2))))
        .unzip()
}

pub fn sup<'a>(it: impl IntoIterator<Item = &'a f64>) -> f64 {
    it.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}
