//! A non-radial domain: the ellipse `x²/4 + y² < 1`.
//!
//! Nearest points and curvature come from the implicit description. The
//! q-mean of the enhanced barriers brackets the unknown solution's q-mean,
//! and both scaled values approach the curvature-dependent prediction.

use resolvent_asym::geometry::{DomainOracle, MonteCarloConfig, TouchingBallConfig};
use resolvent_asym::params::Exponent;
use resolvent_asym::qmeans::{qmean_limit_experiment, BarrierSetup};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let domain = DomainOracle::ellipsoid(vec![2.0, 1.0])?;
    for x in [[1.5, 0.0], [0.0, 0.5], [1.0, 0.5]] {
        let (d, y) = domain.distance_and_nearest(&x)?;
        let kappa = domain.principal_curvatures(&y)?;
        println!("x = {x:?}: d = {d:.6}, nearest ({:.6}, {:.6}), curvature {:.6}", y[0], y[1], kappa[0]);
    }

    // vertex (2, 0) has curvature 2, so the touching radius must stay below 1/2
    let cfg = TouchingBallConfig::new(&domain, &[1.75, 0.0])?;
    println!("\ntouching ball at {:?}, R = {}, Pi = {:.6}", cfg.x, cfg.radius, cfg.pi_gamma());
    let setup =
        BarrierSetup { r_i: 0.2, r_e: 0.2, monte_carlo: MonteCarloConfig { samples: 400_000, strata: 32, seed: 7 } };
    let rows = qmean_limit_experiment(
        &domain,
        &cfg,
        Exponent::Finite(2.0),
        Exponent::Finite(2.0),
        &[0.04, 0.02, 0.01],
        Some(setup),
    )?;
    for row in rows {
        println!(
            "  {:<9} eps {:<5} scaled {:.5}  prediction {:.5}  ratio {:.4}",
            row.path, row.eps, row.scaled, row.prediction, row.ratio
        );
    }
    Ok(())
}
