use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use resolvent_asym::barriers::{barrier_table, radial_grid};
use resolvent_asym::error::{Error, Result};
use resolvent_asym::experiments::{
    self, configure_threads, metadata, render, run_psi_rate_table, run_qmean_sweep, run_varadhan_sweep, GeometryConfig,
    OutputFormat, SweepConfig, Table,
};
use resolvent_asym::geometry::level_set_area;
use resolvent_asym::params::{Exponent, ProblemParams};
use resolvent_asym::quadrature::QuadratureConfig;
use resolvent_asym::radial::{RadialGeometry, RadialSolution};
use resolvent_asym::special_fn::{bessel_k_identity_residual, f_asymptotic, f_exact};

#[derive(Parser)]
#[command(name = "resolvent-asym", version, about = "Radial solutions, barriers, rates and q-means")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Ball,
    Exterior,
}

impl Shape {
    fn geometry(self, radius: f64) -> RadialGeometry {
        match self {
            Shape::Ball => RadialGeometry::Ball { radius },
            Shape::Exterior => RadialGeometry::Exterior { radius },
        }
    }
}

#[derive(clap::Args)]
struct Output {
    /// csv or json; defaults to the output extension, else csv
    #[arg(long)]
    format: Option<OutputFormat>,
    /// write here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the radial solution at one radius
    EvalRadial {
        #[arg(long = "N")]
        dim: usize,
        /// a number > 1 or "inf"
        #[arg(long)]
        p: Exponent,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_enum)]
        geometry: Shape,
        #[arg(long = "R")]
        radius: f64,
        #[arg(long)]
        r: f64,
    },
    /// Evaluate f(σ, α) and its asymptotic branch
    SpecialF {
        #[arg(long)]
        sigma: f64,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        /// also check the Bessel-K identity (needs -1 < α ≤ 0)
        #[arg(long)]
        check_bessel: bool,
    },
    /// Tabulate U ≤ u ≤ V over the domain
    Barriers {
        #[arg(long = "N")]
        dim: usize,
        #[arg(long)]
        p: Exponent,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_enum)]
        geometry: Shape,
        #[arg(long = "R")]
        radius: f64,
        #[arg(long, default_value_t = 41)]
        points: usize,
        /// radial extent of the exterior grid
        #[arg(long, default_value_t = 2.0)]
        extent: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Level-set areas inside the touching ball against the predicted limit
    Geom {
        #[arg(long = "N")]
        dim: usize,
        #[arg(long, value_enum)]
        geometry: Shape,
        /// radius of the ball or of the excluded ball
        #[arg(long)]
        radius: f64,
        /// touching-ball radius
        #[arg(long = "R")]
        touching_radius: Option<f64>,
        /// comma-separated levels; default 2R·10^-k, k = 1..6
        #[arg(long, value_delimiter = ',')]
        s: Vec<f64>,
        #[command(flatten)]
        out: Output,
    },
    /// Run a q-mean sweep from a JSON config
    Qmean {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run Varadhan-rate and ψ(ε) sweeps from a JSON config
    Rates {
        #[arg(long)]
        config: PathBuf,
    },
}

fn print_json(v: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v).expect("serializable");
    text.push('\n');
    write_out(&text, None)
}

/// Writes to `path`, or stdout; a closed stdout pipe is not an error.
fn write_out(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io { path: p.to_path_buf(), source }),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                Err(Error::Io { path: PathBuf::from("<stdout>"), source: e })
            }
            _ => Ok(()),
        },
    }
}

fn emit(table: &Table, out: &Output, command: &str, config: Value, seed: Option<u64>) -> Result<()> {
    let format = out.format.or_else(|| out.output.as_deref().map(OutputFormat::from_path)).unwrap_or_default();
    let text = render(table, format, &metadata(command, &config, seed))?;
    write_out(&text, out.output.as_deref())
}

fn emit_sweep(table: &Table, cfg: &SweepConfig, command: &str, suffix: Option<&str>) -> Result<()> {
    let format = cfg.output_format();
    let meta = metadata(command, &cfg.to_value(), Some(cfg.seed));
    match (&cfg.output, suffix) {
        (Some(path), Some(sfx)) => {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
            let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
            experiments::emit(table, format, &path.with_file_name(format!("{stem}_{sfx}.{ext}")), &meta)
        }
        (Some(path), None) => experiments::emit(table, format, path, &meta),
        (None, _) => write_out(&render(table, format, &meta)?, None),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::EvalRadial { dim, p, eps, geometry, radius, r } => {
            let params = ProblemParams::new(dim, p, eps)?;
            let geom = shape_geometry(geometry, radius)?;
            let sol = RadialSolution::new(params, geom)?;
            let log_u = sol.eval_log_u(r)?;
            let h = eps / 20.0;
            let ode = sol.ode_residual(r, h).ok();
            print_json(&json!({
                "N": dim,
                "p": p,
                "eps": eps,
                "geometry": geom,
                "r": r,
                "distance": geom.distance(r)?,
                "log_u": log_u,
                "u": log_u.exp(),
                "varadhan_residual": sol.varadhan_residual(r)?,
                "ode_residual": ode,
            }))?;
        }
        Command::SpecialF { sigma, alpha, check_bessel } => {
            let cfg = QuadratureConfig::default();
            let f = f_exact(sigma, alpha, &cfg)?;
            let branch = f_asymptotic(sigma, alpha)?;
            let bessel = if check_bessel { Some(bessel_k_identity_residual(sigma, alpha, &cfg)?) } else { None };
            print_json(&json!({
                "sigma": sigma,
                "alpha": alpha,
                "log_f": f.ln(),
                "f": f.value(),
                "asymptotic": branch.map(|b| json!({
                    "regime": b.regime,
                    "log_leading": b.leading,
                    "relative_error": (b.leading - f.ln()).exp_m1(),
                    "error_order": b.error_order,
                    "sign_discrepancy": b.sign_discrepancy,
                })),
                "bessel_residual": bessel,
            }))?;
        }
        Command::Barriers { dim, p, eps, geometry, radius, points, extent, out } => {
            let params = ProblemParams::new(dim, p, eps)?;
            let geom = shape_geometry(geometry, radius)?;
            let rows = barrier_table(params, geom, &radial_grid(geom, points, extent))?;
            let mut table = Table::new(&["r", "tau", "log_U", "log_u", "log_V", "violation"]);
            for row in rows {
                table.push(vec![
                    row.r.into(),
                    row.tau.into(),
                    row.log_u_lower.into(),
                    row.log_u.into(),
                    row.log_v_upper.into(),
                    row.violation().into(),
                ])?;
            }
            let config = json!({"N": dim, "p": p, "eps": eps, "geometry": geom, "points": points, "extent": extent});
            emit(&table, &out, "barriers", config, None)?;
        }
        Command::Geom { dim, geometry, radius, touching_radius, s, out } => {
            let geom_cfg = match geometry {
                Shape::Ball => GeometryConfig::Ball { radius, touching_radius },
                Shape::Exterior => GeometryConfig::Exterior { radius, touching_radius },
            };
            let (domain, touch) = geom_cfg.build(dim)?;
            let levels = if s.is_empty() { (1..=6).map(|k| 2.0 * touch.radius * 10f64.powi(-k)).collect() } else { s };
            let limit = touch.area_ratio_limit();
            let power = (dim as f64 - 1.0) / 2.0;
            let mut table = Table::new(&["s", "area", "ratio", "predicted_limit"]);
            for level in levels {
                let area = level_set_area(&domain, &touch, level)?;
                table.push(vec![level.into(), area.into(), (area / level.powf(power)).into(), limit.into()])?;
            }
            emit(&table, &out, "geom", json!({"N": dim, "geometry": geom_cfg}), None)?;
        }
        Command::Qmean { config } => {
            let cfg = SweepConfig::load(&config)?;
            emit_sweep(&run_qmean_sweep(&cfg)?, &cfg, "qmean", None)?;
        }
        Command::Rates { config } => {
            let cfg = SweepConfig::load(&config)?;
            let modulus_only = cfg.geometry.radial().is_none();
            if !modulus_only {
                let report = run_varadhan_sweep(&cfg)?;
                for f in &report.fits {
                    eprintln!(
                        "N={} p={} r={}: {:?} C={:.4e} r2={:.4} bounded={} matched={} best={:?}",
                        f.dim,
                        f.p,
                        f.r,
                        f.fit.model,
                        f.fit.coefficient,
                        f.fit.r_squared,
                        f.fit.bounded,
                        f.fit.matched(),
                        f.best_model
                    );
                }
                let suffix = cfg.modulus.is_some().then_some("varadhan");
                emit_sweep(&report.table, &cfg, "rates", suffix)?;
            }
            if let Some(m) = &cfg.modulus {
                let report = run_psi_rate_table(m, &cfg.eps.values())?;
                eprintln!("eps log psi converges: {}", report.converges);
                let suffix = (!modulus_only).then_some("psi");
                emit_sweep(&report.table, &cfg, "rates", suffix)?;
            } else if modulus_only {
                return Err(Error::Config("rates needs a ball or exterior geometry or a modulus".into()));
            }
        }
    }
    Ok(())
}

fn shape_geometry(shape: Shape, radius: f64) -> Result<RadialGeometry> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("R must be positive, got {radius}")));
    }
    Ok(shape.geometry(radius))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
