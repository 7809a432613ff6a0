//! Tabulates the hierarchy coefficients at a few sites and checks that the
//! TL_r vector field equals the commutator [P_{2r+2}, H].

use toda_lab::hierarchy::{hierarchy_fields, lax_operator, tl_field, HierarchyCoeffs};
use toda_lab::lattice::LatticeState;

fn main() -> toda_lab::Result<()> {
    let s = LatticeState::from_fn(-20, 20, 0.5, 0.0, 0.0, |n| {
        let x = n as f64;
        if x.abs() <= 3.0 {
            (0.5 + 0.1 * (x + 1.0).cos(), 0.2 * x.sin())
        } else {
            (0.5, 0.0)
        }
    })?;

    let coeffs = HierarchyCoeffs::with_constants(&[1.0, 0.3, -0.2])?;
    let f = hierarchy_fields(&s, &coeffs, -2..=2);
    println!("  n      g_0      g_1      g_2      g_3      h_3");
    for n in f.range() {
        println!("{n:3} {:8.4} {:8.4} {:8.4} {:8.4} {:8.4}", f.g(0, n), f.g(1, n), f.g(2, n), f.g(3, n), f.h(3, n));
    }

    for r in 0..=3 {
        let coeffs = HierarchyCoeffs::homogeneous(r);
        let p = lax_operator(&s, &coeffs);
        let (a_dot, b_dot) = tl_field(&s, &coeffs);
        let mut worst = 0.0f64;
        for (i, n) in (s.n_min()..=s.n_max()).enumerate() {
            worst = worst.max((p.commutator_entry(&s, n, n + 1) - a_dot[i]).abs());
            worst = worst.max((p.commutator_entry(&s, n, n) - b_dot[i]).abs());
        }
        println!("r = {r}: bandwidth {}, max |[P, H] - field| = {worst:.2e}", p.bandwidth());
    }
    Ok(())
}
