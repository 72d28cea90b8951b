//! Barriers bracketing the radial solutions, `U ≤ u ≤ V`, and the exterior
//! chain of bounds on `ε log u + √p' d`.

use resolvent_asym::barriers::{barrier_table, exterior_chain, radial_grid, sandwich_check};
use resolvent_asym::params::{Exponent, ProblemParams};
use resolvent_asym::radial::RadialGeometry;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ProblemParams::new(2, Exponent::Finite(3.0), 0.05)?;
    let ball = RadialGeometry::Ball { radius: 1.0 };
    println!("{:>6} {:>8} {:>12} {:>12} {:>12}", "r", "tau", "log U", "log u", "log V");
    for row in barrier_table(params, ball, &radial_grid(ball, 11, 0.0))? {
        println!(
            "{:>6.2} {:>8.3} {:>12.6} {:>12.6} {:>12.6}",
            row.r, row.tau, row.log_u_lower, row.log_u, row.log_v_upper
        );
    }

    println!("\nworst violation over 50 radii (negative is good)");
    for p in [Exponent::Finite(1.5), Exponent::Finite(2.0), Exponent::Finite(5.0), Exponent::Infinity] {
        for geometry in [ball, RadialGeometry::Exterior { radius: 1.0 }] {
            let params = ProblemParams::new(3, p, 0.05)?;
            let worst = sandwich_check(params, geometry, &radial_grid(geometry, 50, 2.0))?;
            println!("  p = {p:<4} {geometry:?}: {worst:.3e}");
        }
    }

    let chain = exterior_chain(ProblemParams::new(2, Exponent::Finite(2.0), 0.02)?, 1.0, &[1.5, 0.0], &[0.5, 0.0])?;
    println!("\nexterior chain at |x| = 1.5: {:.5} <= {:.5} <= {:.5}", chain.lower, chain.middle, chain.upper);
    Ok(())
}
