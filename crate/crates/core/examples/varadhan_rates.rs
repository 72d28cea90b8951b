//! Rate of `ε log u^ε → -√p' d_Γ` on the unit ball, driven by the same JSON
//! config the `rates` subcommand reads.

use resolvent_asym::experiments::{run_varadhan_sweep, SweepConfig};

const CONFIG: &str = r#"{
    "dims": [2, 3],
    "p_values": [1.5, 2, 4, "inf"],
    "eps": {"start": 0.1, "factor": 0.1, "count": 4},
    "geometry": {"kind": "ball", "radius": 1.0},
    "radii": [0.0, 0.5]
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SweepConfig::from_json(CONFIG)?;
    let report = run_varadhan_sweep(&cfg)?;
    println!(
        "{:>2} {:>4} {:>4} {:>8} {:>11} {:>8} {:>9} {:>8} {:>8}",
        "N", "p", "r", "model", "C", "r2", "max ratio", "bounded", "best"
    );
    for f in &report.fits {
        println!(
            "{:>2} {:>4} {:>4} {:>8} {:>11.4e} {:>8.4} {:>9.4} {:>8} {:>8}",
            f.dim,
            f.p.to_string(),
            f.r,
            format!("{:?}", f.fit.model),
            f.fit.coefficient,
            f.fit.r_squared,
            f.fit.max_ratio,
            f.fit.bounded,
            format!("{:?}", f.best_model)
        );
    }
    print!("\n{}", report.table.to_csv()?);
    Ok(())
}
