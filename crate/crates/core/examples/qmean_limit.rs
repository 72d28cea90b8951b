//! Scaled q-means on the unit disc converging to the curvature-dependent limit.

use resolvent_asym::geometry::{DomainOracle, TouchingBallConfig};
use resolvent_asym::params::Exponent;
use resolvent_asym::qmeans::qmean_limit_experiment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let domain = DomainOracle::ball(2, 1.0)?;
    let cfg = TouchingBallConfig::new(&domain, &[0.5, 0.0])?;
    let eps = [0.02, 0.01, 0.005];
    for p in [Exponent::Finite(2.0), Exponent::Infinity] {
        for q in [Exponent::Finite(2.0), Exponent::Finite(3.0), Exponent::Infinity] {
            let rows = qmean_limit_experiment(&domain, &cfg, p, q, &eps, None)?;
            println!("p = {p}, q = {q}");
            for w in rows.windows(2) {
                let r = w[0].eps / w[1].eps;
                let rich = (r * w[1].scaled - w[0].scaled) / (r - 1.0);
                println!(
                    "  eps {:>6}  scaled {:.6}  prediction {:.6}  ratio {:.4}  richardson ratio {:.4}",
                    w[1].eps,
                    w[1].scaled,
                    w[1].prediction,
                    w[1].ratio,
                    rich / w[1].prediction
                );
            }
            println!("  eps {:>6}  ratio {:.4}  residual {:.1e}", rows[0].eps, rows[0].ratio, rows[0].residual);
        }
    }
    Ok(())
}
