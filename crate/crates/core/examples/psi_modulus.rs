//! `ψ(ε)`, the distance from `(0, ε)` to the graph of a modulus of
//! continuity, and whether `ε log ψ(ε) → 0` along a sequence.

use resolvent_asym::experiments::run_psi_rate_table;
use resolvent_asym::geometry::{ModulusKind, ModulusOfContinuity};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let eps = [0.1, 0.05, 0.02, 0.01, 0.005];
    let moduli = [
        ("lipschitz L=2", ModulusOfContinuity::new(ModulusKind::Lipschitz { constant: 2.0 }, 1.0)?),
        ("holder s^0.5", ModulusOfContinuity::new(ModulusKind::Holder { constant: 1.0, exponent: 0.5 }, 1.0)?),
        ("1/log(1/s)", ModulusOfContinuity::new(ModulusKind::LogInverse, 0.5)?),
    ];
    for (name, m) in moduli {
        let report = run_psi_rate_table(&m, &eps)?;
        println!("{name}: converges = {}", report.converges);
        print!("{}", report.table.to_csv()?);
        println!();
    }
    Ok(())
}
