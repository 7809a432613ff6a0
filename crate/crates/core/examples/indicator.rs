//! Finite-sample indicator functions of a few entire functions.

use std::f64::consts::PI;

use num_complex::Complex64;
use toda_lab::evolution::{exponential_type, indicator_estimate, log_modulus_of};

fn main() -> toda_lab::Result<()> {
    let family: [(&str, fn(Complex64) -> Complex64); 3] =
        [("exp(2z)", |z| (2.0 * z).exp()), ("cosh(z)", |z| z.cosh()), ("sin(z)", |z| z.sin())];
    for (name, f) in family {
        let h: Vec<String> = (0..4)
            .map(|j| {
                let phi = PI * j as f64 / 2.0;
                indicator_estimate(log_modulus_of(f), phi, 50.0, 2000).map(|e| format!("{:+.4}", e.h_estimate))
            })
            .collect::<Result<_, _>>()?;
        let sigma = exponential_type(log_modulus_of(f), 50.0, 2000, 16)?;
        println!("{name:8} h(0, pi/2, pi, 3pi/2) = {}  type ~ {sigma:.4}", h.join(" "));
    }

    // log|exp(z^2)| = Re z^2 stays finite where exp(z^2) itself would overflow
    let est = indicator_estimate(|z: Complex64| (z * z).re, 0.0, 50.0, 500)?;
    println!("exp(z^2) along phi = 0: log|f|/r at r = 50 is {:.1}; not of exponential type", est.h_estimate);
    Ok(())
}
