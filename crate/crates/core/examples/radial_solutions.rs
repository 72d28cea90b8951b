//! Exact radial solutions in a ball and outside a ball.
//!
//! Prints `log u` at a few radii, the Varadhan residual `ε log u + √p' d`
//! and the finite-difference residual of the radial ODE.

use resolvent_asym::params::{Exponent, ProblemParams};
use resolvent_asym::radial::{RadialGeometry, RadialSolution};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let geometries = [RadialGeometry::Ball { radius: 1.0 }, RadialGeometry::Exterior { radius: 1.0 }];
    for geometry in geometries {
        for p in [Exponent::Finite(1.5), Exponent::Finite(3.0), Exponent::Infinity] {
            println!("{geometry:?}, N = 3, p = {p}");
            for eps in [0.1, 0.01] {
                let sol = RadialSolution::new(ProblemParams::new(3, p, eps)?, geometry)?;
                for d in [0.1, 0.5] {
                    let r = geometry.radius_at_distance(d)?;
                    println!(
                        "  eps {eps:<5} d {d:<4} log u {:>12.6}  varadhan {:>10.3e}  ode {:>9.2e}",
                        sol.log_u_at_distance(d)?,
                        sol.varadhan_residual(r)?,
                        sol.ode_residual(r, eps / 100.0)?
                    );
                }
            }
        }
    }
    Ok(())
}
