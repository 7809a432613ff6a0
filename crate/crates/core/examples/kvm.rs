//! The Kac-van Moerbeke lattice against its embedding as TL_1 with b = 0.

use toda_lab::flow::{integrate, integrate_kvm, FlowConfig};
use toda_lab::hierarchy::{kvm_embed, HierarchyCoeffs};
use toda_lab::lattice::KvMState;

fn main() -> toda_lab::Result<()> {
    let rho: Vec<f64> = (-40i64..=40).map(|n| 0.5 + 0.3 * (-(n * n) as f64 / 8.0).exp()).collect();
    let s = KvMState::new(-40, rho, 0.5, 0.0)?;
    let coeffs = HierarchyCoeffs::homogeneous(1);

    let config = FlowConfig::default();
    let kvm = integrate_kvm(&s, 2.0, &config)?;
    let toda = integrate(&kvm_embed(&s, &coeffs)?, &coeffs, 2.0, &config)?;
    let (k, t) = (kvm.last(), toda.last());
    let diff = k.values().iter().zip(t.a_values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let b = t.b_values().iter().map(|v| v.abs()).fold(0.0, f64::max);
    println!("t = 2: max |rho - a| = {diff:.2e}, max |b| = {b:.2e}");
    println!("KvM trace drift {:?}", kvm.max_trace_drift());
    Ok(())
}
