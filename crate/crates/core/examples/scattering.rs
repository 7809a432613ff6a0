//! Forward scattering transform of a compact perturbation: bound states,
//! norming constants and reflection on the unit circle.

use toda_lab::lattice::LatticeState;
use toda_lab::spectral::{build_jacobi, default_k_grid, scattering_coefficients, scattering_data};

fn main() -> toda_lab::Result<()> {
    let s = LatticeState::new(-3, vec![0.5, 0.9, 1.1, 0.7, 0.5], vec![0.0, 0.4, -0.3, 0.2, 0.0], 0.5, 0.0, 0.0)?;
    let h = build_jacobi(&s)?;
    let sd = scattering_data(&h, &default_k_grid(256), 401)?;

    for b in &sd.bound_states {
        println!("lambda = {:+.10}  k = {:+.10}  gamma+ = {:.6e}  gamma- = {:.6e}", b.lambda, b.k, b.gamma_plus, b.gamma_minus);
    }
    let mut unitarity = 0.0f64;
    for &k in &sd.k_grid {
        let c = scattering_coefficients(&h, k)?;
        unitarity = unitarity.max((c.transmission.norm_sqr() + c.r_plus.norm_sqr() - 1.0).abs());
    }
    println!("max ||T|^2 + |R|^2 - 1| over the grid: {unitarity:.2e}");
    for j in (0..256).step_by(32) {
        println!("k = {:+.4}{:+.4}i  |R+| = {:.6}", sd.k_grid[j].re, sd.k_grid[j].im, sd.r_plus[j].norm());
    }
    Ok(())
}
