//! Acceptance suite: one PASS/FAIL line per criterion, with its runtime
//! budget. Exits nonzero if any criterion fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use resolvent_asym::barriers::{radial_barriers, radial_grid, sandwich_check};
use resolvent_asym::experiments::{
    emit, metadata, run_psi_rate_table, run_qmean_sweep, run_varadhan_sweep, Cell, OutputFormat, SweepConfig,
};
use resolvent_asym::geometry::{
    band_area_monte_carlo, band_average_area, level_set_area, DomainOracle, ModulusKind, ModulusOfContinuity,
    MonteCarloConfig, TouchingBallConfig,
};
use resolvent_asym::params::{Exponent, ProblemParams};
use resolvent_asym::qmeans::{
    limit_prediction, profile_limit, q_mean, q_mean_bruteforce, qmean_limit_experiment, radial_volume_average, Profile,
    QMeanPath, QMeanQuery,
};
use resolvent_asym::quadrature::QuadratureConfig;
use resolvent_asym::radial::{RadialGeometry, RadialSolution};
use resolvent_asym::special_fn::{
    bessel_k_identity_residual, f_asymptotic, f_exact, mollifier_expectation, MollifierKind,
};

type Res<T> = Result<T, Box<dyn std::error::Error>>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Res<Outcome> {
    Ok(Outcome { pass, detail })
}

const PS: [Exponent; 5] =
    [Exponent::Finite(1.5), Exponent::Finite(2.0), Exponent::Finite(3.0), Exponent::Finite(5.0), Exponent::Infinity];

fn radial_benchmarks() -> [RadialGeometry; 2] {
    [RadialGeometry::Ball { radius: 1.0 }, RadialGeometry::Exterior { radius: 1.0 }]
}

fn closed_forms() -> Res<Outcome> {
    let cfg = QuadratureConfig::default();
    let mut worst_f: f64 = 0.0;
    for sigma in [0.1, 1.0, 10.0, 100.0] {
        let f = f_exact(sigma, 1.0, &cfg)?.value();
        worst_f = worst_f.max((f * sigma - 1.0).abs());
    }
    let mut worst_ext: f64 = 0.0;
    for dim in [2, 3] {
        for eps in [0.1, 0.01] {
            let geometry = RadialGeometry::Exterior { radius: 1.0 };
            let sol = RadialSolution::new(ProblemParams::new(dim, Exponent::Infinity, eps)?, geometry)?;
            for r in radial_grid(geometry, 100, 5.0) {
                worst_ext = worst_ext.max(sol.varadhan_residual(r)?.abs());
            }
        }
    }
    outcome(
        worst_f <= 1e-10 && worst_ext <= 1e-12,
        format!("max |σ f(σ,1) - 1| = {worst_f:.1e}, max exterior p=inf residual = {worst_ext:.1e}"),
    )
}

fn asymptotic_branches() -> Res<Outcome> {
    let cfg = QuadratureConfig::default();
    let sigma = 1e3;
    let mut worst_large: f64 = 0.0;
    for alpha in [-0.5, 0.0, 0.5, 1.0, 2.0] {
        let exact = f_exact(sigma, alpha, &cfg)?.ln();
        let b = f_asymptotic(sigma, alpha)?.ok_or("no large-sigma branch")?;
        worst_large = worst_large.max((exact - b.leading).exp_m1().abs());
    }
    let mut small_ok = true;
    let mut small_last: f64 = 0.0;
    for alpha in [0.5, 1.0, 2.0] {
        let mut errs = Vec::new();
        for s in [1e-3, 1e-4, 1e-5] {
            let exact = f_exact(s, alpha, &cfg)?.ln();
            let b = f_asymptotic(s, alpha)?.ok_or("no small-sigma branch")?;
            errs.push((exact - b.leading).exp_m1().abs());
        }
        // at α = 1 the leading term is exact and the errors are round-off
        small_ok &= errs.windows(2).all(|w| w[1] < w[0] || w[0].max(w[1]) < 1e-12);
        small_last = small_last.max(errs[2]);
    }
    let mut worst_bessel: f64 = 0.0;
    for s in [0.1, 1.0, 10.0] {
        for alpha in [-0.75, -0.5, 0.0] {
            worst_bessel = worst_bessel.max(bessel_k_identity_residual(s, alpha, &cfg)?);
        }
    }
    outcome(
        worst_large <= 10.0 / sigma && small_ok && worst_bessel < 1e-6,
        format!(
            "large-σ max |ratio-1| = {worst_large:.2e} (bound {:.0e}), small-σ monotone = {small_ok} (last {small_last:.1e}), Bessel residual {worst_bessel:.1e}",
            10.0 / sigma
        ),
    )
}

fn mollifier() -> Res<Outcome> {
    let cfg = QuadratureConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for alpha in [0.0, 1.0] {
        for (sigma, tol) in [(1e3, 0.05), (1e5, 0.005)] {
            let err = (mollifier_expectation(f64::cos, sigma, alpha, MollifierKind::Mu, &cfg)? - 1.0).abs();
            pass &= err < tol;
            parts.push(format!("α={alpha} σ={sigma:.0e}: {err:.1e}"));
        }
    }
    outcome(pass, parts.join(", "))
}

fn sandwich() -> Res<Outcome> {
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    for geometry in radial_benchmarks() {
        for p in PS {
            for dim in [2, 3] {
                for eps in [0.2, 0.05] {
                    let params = ProblemParams::new(dim, p, eps)?;
                    worst = worst.max(sandwich_check(params, geometry, &radial_grid(geometry, 50, 2.0))?);
                    count += 1;
                }
            }
        }
    }
    outcome(worst <= 1e-9, format!("{count} benchmarks x 50 radii, worst log violation {worst:.1e}"))
}

fn ode_residuals() -> Res<Outcome> {
    let mut worst: f64 = 0.0;
    for geometry in radial_benchmarks() {
        let radii: Vec<f64> = match geometry {
            RadialGeometry::Ball { radius } => (0..10).map(|k| radius * (k as f64 + 0.5) / 10.0).collect(),
            RadialGeometry::Exterior { radius } => (0..10).map(|k| radius + 0.05 + 0.2 * k as f64).collect(),
        };
        for p in PS {
            for dim in [2, 3] {
                for eps in [0.2, 0.05] {
                    let sol = RadialSolution::new(ProblemParams::new(dim, p, eps)?, geometry)?;
                    for &r in &radii {
                        worst = worst.max(sol.ode_residual(r, eps / 100.0)?);
                    }
                }
            }
        }
    }
    outcome(worst < 1e-3, format!("max relative residual {worst:.2e} at h = ε/100"))
}

fn varadhan_rates() -> Res<Outcome> {
    let cfg = SweepConfig::from_json(
        r#"{"dims": [2, 3], "p_values": [1.5, 2, 3, 5, "inf"], "eps": {"start": 0.1, "factor": 0.1, "count": 4},
            "geometry": {"kind": "ball", "radius": 1.0}, "radii": [0.0]}"#,
    )?;
    let report = run_varadhan_sweep(&cfg)?;
    let ratio_col = report.table.column("ratio").ok_or("ratio column")?;
    let mut monotone = true;
    let mut widest: f64 = 1.0;
    for (k, fit) in report.fits.iter().enumerate() {
        let ratios: Vec<f64> = report.table.rows[4 * k..4 * k + 4]
            .iter()
            .map(|row| match row[ratio_col] {
                Cell::Num(v) => v,
                _ => f64::NAN,
            })
            .collect();
        let mut sorted = ratios.clone();
        sorted.sort_by(f64::total_cmp);
        let median = 0.5 * (sorted[1] + sorted[2]);
        let spread = sorted[3] / median.max(f64::MIN_POSITIVE);
        let spread = spread.max(median / sorted[0]);
        widest = widest.max(spread);
        monotone &= fit.monotone;
    }
    outcome(
        widest <= 2.0 && monotone,
        format!("r = 0, widest ratio/median factor {widest:.3}, residuals monotone = {monotone}"),
    )
}

fn geometric_limit() -> Res<Outcome> {
    let cases = [
        ("ball N=2", DomainOracle::ball(2, 1.0)?, vec![0.5, 0.0]),
        ("exterior N=2", DomainOracle::exterior_ball(2, 1.0)?, vec![2.0, 0.0]),
        ("exterior N=3", DomainOracle::exterior_ball(3, 1.0)?, vec![2.0, 0.0, 0.0]),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, domain, x) in cases {
        let cfg = TouchingBallConfig::new(&domain, &x)?;
        let s = 1e-4;
        let ratio = level_set_area(&domain, &cfg, s)? / s.powf((cfg.dim() as f64 - 1.0) / 2.0);
        let rel = (ratio / cfg.area_ratio_limit() - 1.0).abs();
        let (band_s, h) = (0.1 * cfg.radius, 0.01 * cfg.radius);
        let exact = band_average_area(&domain, &cfg, band_s, h)?;
        let mc = band_area_monte_carlo(&domain, &cfg, band_s, h, MonteCarloConfig::default())?;
        let z = (mc.mean - exact) / mc.std_err;
        pass &= rel < 0.01 && z.abs() <= 3.0;
        parts.push(format!("{name}: limit err {rel:.1e}, MC z {z:+.2}"));
    }
    outcome(pass, parts.join("; "))
}

fn qmean_limit() -> Res<Outcome> {
    let domain = DomainOracle::ball(2, 1.0)?;
    let cfg = TouchingBallConfig::new(&domain, &[0.5, 0.0])?;
    let eps = [0.02, 0.01, 0.005];
    let mut pass = true;
    let mut worst_rich: f64 = 0.0;
    let mut worst_routes: f64 = 0.0;
    for p in [Exponent::Finite(2.0), Exponent::Infinity] {
        let p_conj = resolvent_asym::params::conjugate(p)?.finite().unwrap_or(1.0);
        for q in [2.0, 3.0] {
            let rows = qmean_limit_experiment(&domain, &cfg, p, Exponent::Finite(q), &eps, None)?;
            let (a, b) = (&rows[1], &rows[2]);
            let r = a.eps / b.eps;
            let rich = (r * b.scaled - a.scaled) / (r - 1.0);
            let err = (rich / b.prediction - 1.0).abs();
            worst_rich = worst_rich.max(err);
            let via_profile = profile_limit(&cfg, q, |t| (-t).exp())?;
            let in_eps_scaling = via_profile * p_conj.powf(-3.0 / (4.0 * (q - 1.0)));
            let routes = (in_eps_scaling / limit_prediction(p, q, &cfg)? - 1.0).abs();
            worst_routes = worst_routes.max(routes);
            pass &= err <= 0.05 && routes <= 1e-10;
        }
    }
    let inf = qmean_limit_experiment(&domain, &cfg, Exponent::Finite(2.0), Exponent::Infinity, &[0.005], None)?;
    let mid = (inf[0].mu - 0.5).abs();
    pass &= mid <= 1e-3;
    outcome(
        pass,
        format!("Richardson max err {worst_rich:.2e}, constant routes {worst_routes:.1e}, |midrange - 1/2| {mid:.1e}"),
    )
}

fn qmean_solver() -> Res<Outcome> {
    let disc = DomainOracle::ball(2, 1.0)?;
    let disc_cfg = TouchingBallConfig::new(&disc, &[0.5, 0.0])?;
    let ext = DomainOracle::exterior_ball(3, 1.0)?;
    let ext_cfg = TouchingBallConfig::new(&ext, &[2.0, 0.0, 0.0])?;

    let mut fixed_ok = true;
    for q in [Exponent::Finite(1.5), Exponent::Finite(2.0), Exponent::Finite(3.0), Exponent::Infinity] {
        let query = QMeanQuery::new(disc_cfg.clone(), q, 0.02)?;
        fixed_ok &= q_mean(&disc, &query, &Profile::Constant(0.37))?.mu == 0.37;
    }

    let mut avg_err: f64 = 0.0;
    for (domain, cfg) in [(&disc, &disc_cfg), (&ext, &ext_cfg)] {
        for xi in [0.1, 0.02, 0.005] {
            let query = QMeanQuery::new(cfg.clone(), Exponent::Finite(2.0), xi)?;
            let mu = q_mean(domain, &query, &Profile::Exponential)?.mu;
            let avg = radial_volume_average(domain, cfg, xi, |d| (-d / xi).exp())?;
            avg_err = avg_err.max((mu / avg - 1.0).abs());
        }
    }

    let mut order_ok = true;
    for p in [Exponent::Finite(2.0), Exponent::Finite(4.0), Exponent::Infinity] {
        for q in [1.5, 2.0, 3.0] {
            let params = ProblemParams::new(2, p, 0.02)?;
            let geometry = RadialGeometry::Ball { radius: 1.0 };
            let barriers = radial_barriers(params, geometry)?;
            let query = QMeanQuery::new(disc_cfg.clone(), Exponent::Finite(q), params.xi())?;
            let lo = q_mean(&disc, &query, &Profile::BarrierU(barriers.clone()))?.mu;
            let mid = q_mean(&disc, &query, &Profile::Solution(RadialSolution::new(params, geometry)?))?.mu;
            let hi = q_mean(&disc, &query, &Profile::BarrierV(barriers))?.mu;
            order_ok &= lo <= mid * (1.0 + 1e-12) && mid <= hi * (1.0 + 1e-12);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_z: f64 = 0.0;
    for case in 0..5 {
        let q = rng.random_range(1.5..4.0);
        let xi = rng.random_range(0.01..0.1);
        let (domain, cfg) = if case % 2 == 0 { (&disc, &disc_cfg) } else { (&ext, &ext_cfg) };
        let query = QMeanQuery::new(cfg.clone(), Exponent::Finite(q), xi)?;
        let coarea = q_mean(domain, &query, &Profile::Exponential)?;
        debug_assert_eq!(coarea.path, QMeanPath::Coarea);
        let mc = MonteCarloConfig { samples: 1_000_000, seed: rng.random(), ..Default::default() };
        let brute = q_mean_bruteforce(domain, &query, &Profile::Exponential, mc)?;
        let z = (brute.mu - coarea.mu) / brute.std_err.unwrap_or(f64::INFINITY);
        worst_z = worst_z.max(z.abs());
    }
    outcome(
        fixed_ok && avg_err <= 1e-8 && order_ok && worst_z <= 3.0,
        format!("fixed point {fixed_ok}, q=2 vs volume average {avg_err:.1e}, U<=u<=V order {order_ok}, co-area vs MC max |z| {worst_z:.2}"),
    )
}

fn write_suite(dir: &Path) -> Res<()> {
    let ball = SweepConfig::from_json(
        r#"{"p_values": [2, "inf"], "q_values": [2, 3, "inf"], "eps": {"start": 0.04, "factor": 0.5, "count": 4},
            "geometry": {"kind": "ball", "radius": 1.0}, "seed": 11}"#,
    )?;
    let ellipse = SweepConfig::from_json(
        r#"{"q_values": [2], "eps": {"start": 0.04, "factor": 0.5, "count": 4},
            "geometry": {"kind": "ellipsoid", "semi_axes": [2.0, 1.0], "x": [1.75, 0.0], "r_i": 0.2, "r_e": 0.2},
            "seed": 11, "sampling": {"samples": 20000, "strata": 16}}"#,
    )?;
    let rates = SweepConfig::from_json(
        r#"{"dims": [2, 3], "p_values": [2, "inf"], "eps": {"start": 0.1, "factor": 0.1, "count": 4},
            "geometry": {"kind": "ball", "radius": 1.0}, "radii": [0.0, 0.5]}"#,
    )?;
    let meta = |c: &SweepConfig| metadata("acceptance", &c.to_value(), Some(c.seed));
    let ball_table = run_qmean_sweep(&ball)?;
    emit(&ball_table, OutputFormat::Csv, &dir.join("qmean_ball.csv"), &meta(&ball))?;
    emit(&ball_table, OutputFormat::Json, &dir.join("qmean_ball.json"), &meta(&ball))?;
    emit(&run_qmean_sweep(&ellipse)?, OutputFormat::Csv, &dir.join("qmean_ellipse.csv"), &meta(&ellipse))?;
    let varadhan = run_varadhan_sweep(&rates)?;
    emit(&varadhan.table, OutputFormat::Json, &dir.join("varadhan.json"), &meta(&rates))?;
    let holder = ModulusOfContinuity::new(ModulusKind::Holder { constant: 1.0, exponent: 0.5 }, 1.0)?;
    let psi = run_psi_rate_table(&holder, &rates.eps.values())?;
    emit(&psi.table, OutputFormat::Csv, &dir.join("psi.csv"), &meta(&rates))?;
    Ok(())
}

fn determinism() -> Res<Outcome> {
    let a = tempfile::tempdir()?;
    let b = tempfile::tempdir()?;
    write_suite(a.path())?;
    write_suite(b.path())?;
    let mut names: Vec<_> = std::fs::read_dir(a.path())?.map(|e| e.map(|e| e.file_name())).collect::<Result<_, _>>()?;
    names.sort();
    let mut same = true;
    for name in &names {
        same &= std::fs::read(a.path().join(name))? == std::fs::read(b.path().join(name))?;
    }
    outcome(same && names.len() == 5, format!("{} files compared byte for byte, identical = {same}", names.len()))
}

type Criterion = (u32, &'static str, u64, fn() -> Res<Outcome>);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "closed-form exactness", 1, closed_forms),
        (2, "asymptotic branches of f", 10, asymptotic_branches),
        (3, "mollifier concentration", 5, mollifier),
        (4, "barrier sandwich", 30, sandwich),
        (5, "radial ODE residual", 10, ode_residuals),
        (6, "Varadhan rates on the ball", 30, varadhan_rates),
        (7, "level-set area limit", 60, geometric_limit),
        (8, "q-mean limit", 120, qmean_limit),
        (9, "q-mean solver properties", 60, qmean_solver),
        (10, "determinism", 600, determinism),
    ];
    let mut failures = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let (pass, detail) = match result {
            Ok(o) => (o.pass && in_time, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "[{}] {id:>2} {name}: {detail} ({:.2} s, budget {budget} s{})",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            if in_time { "" } else { ", over budget" }
        );
    }
    println!("acceptance: {} passed, {failures} failed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
