//! The weighted integrals behind the radial solutions.
//!
//! `f(σ, α) = ∫₀^∞ e^{-σ(cosh θ - 1)} sinh^α θ dθ` against its asymptotic
//! branches, the Bessel-K identity and the concentration of the mollifiers.

use resolvent_asym::quadrature::QuadratureConfig;
use resolvent_asym::special_fn::{
    bessel_k_identity_residual, f_asymptotic, f_exact, mollifier_expectation, tail_mass, MollifierKind,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = QuadratureConfig::default();
    println!("{:>8} {:>6} {:>14} {:>14}  regime", "sigma", "alpha", "log f", "rel. error");
    for alpha in [-0.5, 0.0, 0.5, 2.0] {
        for sigma in [1e-4, 1e-2, 1e2, 1e4] {
            let f = f_exact(sigma, alpha, &cfg)?;
            match f_asymptotic(sigma, alpha)? {
                Some(b) => println!(
                    "{sigma:>8.0e} {alpha:>6} {:>14.8} {:>14.3e}  {:?}{}",
                    f.ln(),
                    (b.leading - f.ln()).exp_m1(),
                    b.regime,
                    if b.sign_discrepancy { " (constant taken by magnitude)" } else { "" }
                ),
                None => println!("{sigma:>8.0e} {alpha:>6} {:>14.8}", f.ln()),
            }
        }
    }

    println!("\nBessel-K identity residuals");
    for sigma in [0.1, 1.0, 10.0] {
        for alpha in [-0.75, -0.5, 0.0] {
            println!("  sigma {sigma:<4} alpha {alpha:<5} {:.2e}", bessel_k_identity_residual(sigma, alpha, &cfg)?);
        }
    }

    println!("\nE[cos θ] and mass beyond θ = 0.1 under μ^σ");
    for sigma in [1e1, 1e3, 1e5] {
        let mean = mollifier_expectation(f64::cos, sigma, 1.0, MollifierKind::Mu, &cfg)?;
        let tail = tail_mass(MollifierKind::Mu, sigma, 1.0, 0.1, &cfg)?;
        println!("  sigma {sigma:<7} {mean:.8}  tail {tail:.3e}");
    }
    Ok(())
}
