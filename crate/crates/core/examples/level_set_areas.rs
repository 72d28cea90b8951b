//! Area of the distance level sets `{d_Γ = s}` inside a touching ball.
//!
//! As `s → 0` the area scales like `s^{(N-1)/2}` with a constant set by the
//! boundary curvature. The closed-form caps are checked against a seeded
//! Monte Carlo band estimate.

use resolvent_asym::geometry::{
    band_area_monte_carlo, band_average_area, level_set_area, DomainOracle, MonteCarloConfig, TouchingBallConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cases = [
        ("disc rho=1, R=0.5", DomainOracle::ball(2, 1.0)?, vec![0.5, 0.0]),
        ("outside unit disc, R=1", DomainOracle::exterior_ball(2, 1.0)?, vec![2.0, 0.0]),
        ("outside unit ball, R=1", DomainOracle::exterior_ball(3, 1.0)?, vec![2.0, 0.0, 0.0]),
    ];
    for (name, domain, x) in cases {
        let cfg = TouchingBallConfig::new(&domain, &x)?;
        let power = (cfg.dim() as f64 - 1.0) / 2.0;
        println!("{name}: curvatures {:?}, limit {:.8}", cfg.curvatures, cfg.area_ratio_limit());
        for s in [1e-1, 1e-2, 1e-3, 1e-4] {
            let area = level_set_area(&domain, &cfg, s)?;
            println!("  s {s:<7} area/s^{power} {:.8}", area / s.powf(power));
        }
        let (s, h) = (0.1 * cfg.radius, 0.01 * cfg.radius);
        let exact = band_average_area(&domain, &cfg, s, h)?;
        let mc =
            band_area_monte_carlo(&domain, &cfg, s, h, MonteCarloConfig { samples: 1_000_000, ..Default::default() })?;
        println!(
            "  band at s={s}: closed form {exact:.6}, monte carlo {:.6} ± {:.6} ({:+.2} sd)",
            mc.mean,
            mc.std_err,
            (mc.mean - exact) / mc.std_err
        );
    }
    Ok(())
}
