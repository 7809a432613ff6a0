//! Two-time decay witness on three kinds of initial data: a Gaussian bump,
//! a soliton and the bare background.

use toda_lab::analysis::{classify_decay, theorem_witness, DecayBound, TheoremScenario};
use toda_lab::flow::FlowConfig;
use toda_lab::hierarchy::HierarchyCoeffs;
use toda_lab::lattice::LatticeState;
use toda_lab::soliton::{build_soliton, SolitonSpec};

fn main() -> toda_lab::Result<()> {
    let bound = DecayBound::new(10.0, 0.1)?;
    println!("bound {:.3e} at M = 2, tested up to M = {}", bound.value(2), bound.m_max());

    let gaussian = LatticeState::from_fn(-40, 40, 0.5, 0.0, 0.0, |n| (0.5 + 0.05 * (-(n * n) as f64).exp(), 0.0))?;
    let soliton = build_soliton(&SolitonSpec::single(0.5, 1.0)?, -40, 40)?;
    let constant = LatticeState::constant(-40, 81, 0.5, 0.0, 0.0)?;

    for (name, state) in [("gaussian", gaussian), ("soliton", soliton), ("constant", constant)] {
        let scenario = TheoremScenario::new(state, HierarchyCoeffs::homogeneous(0), bound);
        let outcome = theorem_witness(&scenario, &FlowConfig::default())?;
        println!("{name}: {}", outcome.verdict.text());
        for (label, report) in [("t0", &outcome.t0), ("t1", &outcome.t1)] {
            let ratios: Vec<String> = report.records.iter().map(|r| format!("{:.1e}", r.tail_sum / r.bound)).collect();
            println!("  {label}: class {:?}, tail/bound {}", report.fitted_class, ratios.join(" "));
        }
    }

    let exp = LatticeState::from_fn(-60, 60, 0.5, 0.0, 0.0, |n| (0.5 + 0.1 * (-(n.abs() as f64)).exp(), 0.0))?;
    let fit = classify_decay(&exp)?;
    println!("e^(-|n|) profile classified as {:?}", fit.class);
    Ok(())
}
