//! q-means of functions of the distance to the boundary over a touching ball.
//!
//! For `1 < q < ∞` the q-mean `μ` of `f` on `B_R(x)` is the unique root of
//!
//! ```text
//! G(μ) = ∫ [f - μ]_+^{q-1} dy - ∫ [μ - f]_+^{q-1} dy
//! ```
//!
//! which is continuous and strictly decreasing between `min f` and `max f`.
//! On radial domains both integrals are reduced to one dimension with the
//! co-area formula and the closed-form level-set areas; otherwise they are
//! estimated from a stratified sample of the ball.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::barriers::EnhancedBarriers;
use crate::error::{Error, Result};
use crate::geometry::{
    ball_volume, level_set_area, stratified_estimate, unit_sphere_area, BallSampler, DomainOracle, MonteCarloConfig,
    TouchingBallConfig,
};
use crate::params::{ln_gamma, Exponent, LimitConstants, ProblemParams};
use crate::quadrature::{integrate_panels, tanh_sinh, QuadratureConfig};
use crate::radial::{RadialGeometry, RadialSolution};

/// Exponents in `(1, 1.2)` flatten `G` and are reported as ill-conditioned.
pub const ILL_CONDITIONED_BELOW: f64 = 1.2;

const MAX_BISECTIONS: usize = 100;

/// Piecewise-linear interpolation of `log f` on a uniform grid.
#[derive(Debug, Clone)]
pub struct LogTable {
    step: f64,
    logs: Vec<f64>,
}

impl LogTable {
    pub fn new<F: Fn(f64) -> Result<f64>>(f: F, max_tau: f64, points: usize) -> Result<Self> {
        let points = points.max(2);
        let step = max_tau / (points - 1) as f64;
        let logs = (0..points)
            .map(|k| {
                let v = f(step * k as f64)?;
                if v > 0.0 {
                    Ok(v.ln())
                } else {
                    Err(Error::NonPositive(v))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { step, logs })
    }

    pub fn eval(&self, tau: f64) -> f64 {
        let last = self.logs.len() - 1;
        let pos = (tau / self.step).max(0.0);
        let k = (pos.floor() as usize).min(last - 1);
        let t = pos - k as f64;
        (self.logs[k] + t * (self.logs[k + 1] - self.logs[k])).exp()
    }
}

/// Nonincreasing profile `f(τ)` of the scaled distance `τ = d_Γ/ξ`.
#[derive(Clone)]
pub enum Profile {
    Constant(f64),
    /// `e^{-τ}`
    Exponential,
    /// `1` for `τ < threshold`, else `0`
    Step {
        threshold: f64,
    },
    /// exact radial solution; `τ` is measured in its own `ξ = ε/√p'`
    Solution(RadialSolution),
    BarrierU(EnhancedBarriers),
    BarrierV(EnhancedBarriers),
    Table(Arc<LogTable>),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Profile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Profile::Constant(c) => return write!(f, "Constant({c})"),
            Profile::Exponential => "Exponential",
            Profile::Step { threshold } => return write!(f, "Step({threshold})"),
            Profile::Solution(_) => "Solution",
            Profile::BarrierU(_) => "BarrierU",
            Profile::BarrierV(_) => "BarrierV",
            Profile::Table(_) => "Table",
            Profile::Custom(_) => "Custom",
        };
        f.write_str(name)
    }
}

impl Profile {
    pub fn custom<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Profile::Custom(Arc::new(f))
    }

    pub fn eval(&self, tau: f64) -> Result<f64> {
        match self {
            Profile::Constant(c) => Ok(*c),
            Profile::Exponential => Ok((-tau).exp()),
            Profile::Step { threshold } => Ok(if tau < *threshold { 1.0 } else { 0.0 }),
            Profile::Solution(s) => Ok(s.log_u_at_distance(tau * s.params().xi())?.exp()),
            Profile::BarrierU(b) => Ok(b.enhanced_u(tau)?.value()),
            Profile::BarrierV(b) => Ok(b.enhanced_v(tau)?.value()),
            Profile::Table(t) => Ok(t.eval(tau)),
            Profile::Custom(f) => Ok(f(tau)),
        }
    }

    /// Points (in `τ`) where the profile is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Profile::Step { threshold } => vec![*threshold],
            Profile::BarrierV(b) => vec![b.sigma_i()],
            _ => Vec::new(),
        }
    }

    /// Profiles that cost a quadrature per evaluation.
    pub fn is_expensive(&self) -> bool {
        matches!(self, Profile::Solution(_) | Profile::BarrierU(_) | Profile::BarrierV(_))
    }

    /// Dense log-linear table on `[0, max_tau]` for expensive profiles;
    /// other profiles are returned unchanged.
    pub fn tabulated(&self, max_tau: f64, points: usize) -> Result<Profile> {
        if !self.is_expensive() {
            return Ok(self.clone());
        }
        Ok(Profile::Table(Arc::new(LogTable::new(|t| self.eval(t), max_tau, points)?)))
    }
}

/// Ball, exponent and distance scale of one q-mean evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QMeanQuery {
    pub cfg: TouchingBallConfig,
    pub q: Exponent,
    pub xi: f64,
    /// sampling used on non-radial domains
    pub monte_carlo: MonteCarloConfig,
}

impl QMeanQuery {
    pub fn new(cfg: TouchingBallConfig, q: Exponent, xi: f64) -> Result<Self> {
        if !q.exceeds_one() {
            return Err(Error::invalid(format!("q must exceed 1, got {q}")));
        }
        if !(xi > 0.0 && xi.is_finite()) {
            return Err(Error::invalid(format!("xi must be positive, got {xi}")));
        }
        Ok(Self { cfg, q, xi, monte_carlo: MonteCarloConfig::default() })
    }

    pub fn with_monte_carlo(mut self, mc: MonteCarloConfig) -> Self {
        self.monte_carlo = mc;
        self
    }

    /// `(N+1)/(2(q-1))`, zero for `q = ∞`.
    pub fn scaling_exponent(&self) -> f64 {
        match self.q {
            Exponent::Finite(q) => (self.cfg.dim() as f64 + 1.0) / (2.0 * (q - 1.0)),
            Exponent::Infinity => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QMeanPath {
    Coarea,
    Bruteforce,
    Midrange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QMeanResult {
    pub mu: f64,
    /// `(R/ξ)^{(N+1)/(2(q-1))} μ`; equals `μ` for `q = ∞`
    pub scaled: f64,
    /// `G(μ)` relative to `∫ |f - μ|^{q-1}`
    pub residual: f64,
    pub iterations: usize,
    pub path: QMeanPath,
    /// Monte Carlo standard error of `μ`, when sampled
    pub std_err: Option<f64>,
    pub ill_conditioned: bool,
}

impl QMeanResult {
    fn new(query: &QMeanQuery, mu: f64, residual: f64, iterations: usize, path: QMeanPath) -> Self {
        let scaled = mu * (query.cfg.radius / query.xi).powf(query.scaling_exponent());
        let ill_conditioned = matches!(query.q, Exponent::Finite(q) if q < ILL_CONDITIONED_BELOW);
        Self { mu, scaled, residual, iterations, path, std_err: None, ill_conditioned }
    }
}

/// Bisection for the root of a decreasing function on `[lo, hi]` with
/// `g(lo) ≥ 0 ≥ g(hi)`. Wide positive brackets are split geometrically.
fn bisect<G: FnMut(f64) -> Result<f64>>(mut lo: f64, mut hi: f64, mut g: G) -> Result<(f64, usize)> {
    for it in 1..=MAX_BISECTIONS {
        let mid = if lo > 0.0 && hi > 4.0 * lo { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        let v = g(mid)?;
        if v == 0.0 {
            return Ok((mid, it));
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs() || mid <= lo && mid >= hi {
            return Ok((0.5 * (lo + hi), it));
        }
    }
    Err(Error::IterationLimit(format!("bisection bracket [{lo}, {hi}] after {MAX_BISECTIONS} steps")))
}

/// `(min f, max f)` on the ball: `f(2R/ξ)` and `f(0)`.
fn profile_range(query: &QMeanQuery, profile: &Profile) -> Result<(f64, f64)> {
    let lo = profile.eval(2.0 * query.cfg.radius / query.xi)?;
    let hi = profile.eval(0.0)?;
    if !(lo <= hi) {
        return Err(Error::invalid("profile must be nonincreasing"));
    }
    Ok((lo, hi))
}

/// `(f(2R/ξ) + f(0))/2`.
pub fn q_mean_infinity(query: &QMeanQuery, profile: &Profile) -> Result<QMeanResult> {
    let (lo, hi) = profile_range(query, profile)?;
    Ok(QMeanResult::new(query, 0.5 * (lo + hi), 0.0, 0, QMeanPath::Midrange))
}

/// The q-mean of `f(d_Γ/ξ)` on `B_R(x)`: co-area quadrature on radial
/// domains, Monte Carlo otherwise, midrange for `q = ∞`.
pub fn q_mean(domain: &DomainOracle, query: &QMeanQuery, profile: &Profile) -> Result<QMeanResult> {
    match (query.q, domain.radial()) {
        (Exponent::Infinity, _) => q_mean_infinity(query, profile),
        (Exponent::Finite(_), Some(_)) => q_mean_coarea(domain, query, profile),
        (Exponent::Finite(_), None) => {
            let max_tau = 2.0 * query.cfg.radius / query.xi;
            let table = profile.tabulated(max_tau, 20_000)?;
            q_mean_bruteforce(domain, query, &table, query.monte_carlo)
        }
    }
}

struct Coarea<'a> {
    domain: &'a DomainOracle,
    query: &'a QMeanQuery,
    profile: &'a Profile,
    q: f64,
    qcfg: QuadratureConfig,
    breaks: Vec<f64>,
    cache: RefCell<HashMap<u64, f64>>,
    failure: RefCell<Option<Error>>,
}

impl<'a> Coarea<'a> {
    fn new(domain: &'a DomainOracle, query: &'a QMeanQuery, profile: &'a Profile, q: f64) -> Self {
        let two_r = 2.0 * query.cfg.radius;
        let xi = query.xi;
        let mut breaks = vec![0.0, two_r];
        let mut s = xi / 16.0;
        while s < two_r {
            breaks.push(s);
            s *= 2.0;
        }
        breaks.extend(profile.breakpoints().into_iter().map(|t| t * xi));
        // level where the sphere Γ_s starts to lie inside the ball
        if let DomainOracle::Ball { rho, .. } = domain {
            breaks.push(2.0 * (rho - query.cfg.radius));
        }
        breaks.retain(|b| (0.0..=two_r).contains(b));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        Self {
            domain,
            query,
            profile,
            q,
            qcfg: QuadratureConfig::default(),
            breaks,
            cache: RefCell::new(HashMap::new()),
            failure: RefCell::new(None),
        }
    }

    fn f(&self, s: f64) -> f64 {
        if let Some(v) = self.cache.borrow().get(&s.to_bits()) {
            return *v;
        }
        let v = match self.profile.eval(s / self.query.xi) {
            Ok(v) => v,
            Err(e) => {
                self.failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        };
        self.cache.borrow_mut().insert(s.to_bits(), v);
        v
    }

    fn area(&self, s: f64) -> f64 {
        match level_set_area(self.domain, &self.query.cfg, s) {
            Ok(a) => a,
            Err(e) => {
                self.failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    }

    fn check(&self) -> Result<()> {
        match self.failure.borrow_mut().take() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// `sup {s: f(s/ξ) > μ}` on `[0, 2R]`.
    fn crossing(&self, mu: f64) -> f64 {
        let two_r = 2.0 * self.query.cfg.radius;
        if self.f(0.0) <= mu {
            return 0.0;
        }
        if self.f(two_r) > mu {
            return two_r;
        }
        let (mut lo, mut hi) = (0.0, two_r);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.f(mid) > mu {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    fn panels(&self, a: f64, b: f64) -> Vec<f64> {
        let mut p = vec![a];
        p.extend(self.breaks.iter().copied().filter(|&x| x > a && x < b));
        p.push(b);
        p
    }

    /// Both sides of the balance at `μ`.
    fn sides(&self, mu: f64) -> Result<(f64, f64)> {
        let two_r = 2.0 * self.query.cfg.radius;
        let cut = self.crossing(mu);
        let e = self.q - 1.0;
        let power = |t: f64| if t > 0.0 { t.powf(e) } else { 0.0 };
        let plus = if cut > 0.0 {
            integrate_panels(&self.panels(0.0, cut), |n| power(self.f(n.x) - mu) * self.area(n.x), &self.qcfg)?
        } else {
            0.0
        };
        let minus = if cut < two_r {
            integrate_panels(&self.panels(cut, two_r), |n| power(mu - self.f(n.x)) * self.area(n.x), &self.qcfg)?
        } else {
            0.0
        };
        self.check()?;
        Ok((plus, minus))
    }
}

/// Co-area evaluation on a radial domain.
pub fn q_mean_coarea(domain: &DomainOracle, query: &QMeanQuery, profile: &Profile) -> Result<QMeanResult> {
    if domain.radial().is_none() {
        return Err(Error::invalid("the co-area path needs a radial domain"));
    }
    let Exponent::Finite(q) = query.q else {
        return q_mean_infinity(query, profile);
    };
    let (lo, hi) = profile_range(query, profile)?;
    if hi - lo <= f64::EPSILON * hi.abs() {
        return Ok(QMeanResult::new(query, hi, 0.0, 0, QMeanPath::Coarea));
    }
    let co = Coarea::new(domain, query, profile, q);
    let (mu, iterations) = bisect(lo, hi, |mu| {
        let (p, m) = co.sides(mu)?;
        Ok(p - m)
    })?;
    let (p, m) = co.sides(mu)?;
    let residual = if p + m > 0.0 { (p - m) / (p + m) } else { 0.0 };
    Ok(QMeanResult::new(query, mu, residual, iterations, QMeanPath::Coarea))
}

/// Stratified sample average of `sign(f - μ)|f - μ|^{q-1}`, per stratum.
fn balance(values: &[Vec<f64>], mu: f64, q: f64) -> Vec<Vec<f64>> {
    values
        .iter()
        .map(|stratum| {
            stratum
                .iter()
                .map(|&f| {
                    let t = f - mu;
                    t.signum() * t.abs().powf(q - 1.0)
                })
                .collect()
        })
        .collect()
}

fn balance_mean(values: &[Vec<f64>], mu: f64, q: f64) -> f64 {
    let k = values.len() as f64;
    values
        .iter()
        .map(|s| {
            s.iter()
                .map(|&f| {
                    let t = f - mu;
                    t.signum() * t.abs().powf(q - 1.0)
                })
                .sum::<f64>()
                / s.len() as f64
        })
        .sum::<f64>()
        / k
}

/// Monte Carlo q-mean on a stratified sample of `B_R(x)`, with a delta-method
/// standard error.
pub fn q_mean_bruteforce(
    domain: &DomainOracle,
    query: &QMeanQuery,
    profile: &Profile,
    mc: MonteCarloConfig,
) -> Result<QMeanResult> {
    let sampler = BallSampler::new(query.cfg.x.clone(), query.cfg.radius, mc)?;
    let distances = sampler.values(|y| domain.distance(y).unwrap_or(f64::NAN));
    if distances.iter().flatten().any(|d| d.is_nan()) {
        return Err(Error::OutsideDomain("sampled point outside the domain".into()));
    }
    let values = distances
        .iter()
        .map(|s| s.iter().map(|&d| profile.eval(d / query.xi)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    q_mean_from_values(query, &values)
}

/// q-mean of equal-weight strata of function values.
pub fn q_mean_from_values(query: &QMeanQuery, values: &[Vec<f64>]) -> Result<QMeanResult> {
    let (lo, hi) = values.iter().flatten().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::EmptyTable);
    }
    let Exponent::Finite(q) = query.q else {
        let mut r = QMeanResult::new(query, 0.5 * (lo + hi), 0.0, 0, QMeanPath::Midrange);
        r.path = QMeanPath::Bruteforce;
        return Ok(r);
    };
    if hi - lo <= f64::EPSILON * hi.abs() {
        let mut r = QMeanResult::new(query, hi, 0.0, 0, QMeanPath::Bruteforce);
        r.std_err = Some(0.0);
        return Ok(r);
    }
    let (mu, iterations) = bisect(lo, hi, |mu| Ok(balance_mean(values, mu, q)))?;
    let terms = balance(values, mu, q);
    let g = stratified_estimate(&terms);
    let scale =
        stratified_estimate(&terms.iter().map(|s| s.iter().map(|t| t.abs()).collect()).collect::<Vec<Vec<f64>>>()).mean;
    let delta = 1e-6 * (hi - lo);
    let slope = (balance_mean(values, mu - delta, q) - balance_mean(values, mu + delta, q)) / (2.0 * delta);
    let mut result =
        QMeanResult::new(query, mu, if scale > 0.0 { g.mean / scale } else { 0.0 }, iterations, QMeanPath::Bruteforce);
    result.std_err = Some(if slope > 0.0 { g.std_err / slope } else { f64::INFINITY });
    Ok(result)
}

/// `{2^{-(N+1)/2} N!/Γ((N+1)/2)² ∫₀^∞ f^{q-1} τ^{(N-1)/2} dτ}^{1/(q-1)} Π_Γ^{-1/(2(q-1))}`.
pub fn profile_limit<F: Fn(f64) -> f64>(cfg: &TouchingBallConfig, q: f64, f: F) -> Result<f64> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::invalid(format!("q must lie in (1, inf), got {q}")));
    }
    let n = cfg.dim() as f64;
    let integral = profile_moment(&f, q, cfg.dim())?;
    let ln_const = -(n + 1.0) / 2.0 * std::f64::consts::LN_2 + ln_gamma(n + 1.0) - 2.0 * ln_gamma((n + 1.0) / 2.0);
    let inner = ln_const + integral.ln();
    Ok(((inner - 0.5 * cfg.pi_gamma().ln()) / (q - 1.0)).exp())
}

/// `∫₀^∞ f^{q-1} τ^{(N-1)/2} dτ` over doubling panels.
pub fn profile_moment<F: Fn(f64) -> f64>(f: &F, q: f64, dim: usize) -> Result<f64> {
    let cfg = QuadratureConfig::default();
    let m = (dim as f64 - 1.0) / 2.0;
    let integrand = |t: f64| {
        let v = f(t);
        if v > 0.0 {
            v.powf(q - 1.0) * t.powf(m)
        } else {
            0.0
        }
    };
    let mut total = tanh_sinh(0.0, 1.0, &|n| integrand(n.x), &cfg, 0.0)?;
    let mut a = 1.0;
    for _ in 0..80 {
        let piece = tanh_sinh(a, 2.0 * a, &|n| integrand(n.x), &cfg, total.abs())?;
        total += piece;
        a *= 2.0;
        if piece.abs() <= 1e-17 * total.abs() && a > 64.0 {
            return Ok(total);
        }
    }
    Err(Error::Degenerate("profile moment integral does not converge".into()))
}

/// Predicted limit of `(R/ε)^{(N+1)/(2(q-1))} μ_{q,ε}`.
pub fn limit_prediction(p: Exponent, q: f64, cfg: &TouchingBallConfig) -> Result<f64> {
    Ok(LimitConstants::new(cfg.dim(), p, q, &cfg.curvatures, cfg.radius)?.prediction)
}

/// Average of `f(d_Γ)` over `B_R(x)` on a radial domain by nested quadrature
/// in polar coordinates about `x`.
pub fn radial_volume_average<F: Fn(f64) -> f64>(
    domain: &DomainOracle,
    cfg: &TouchingBallConfig,
    scale: f64,
    f: F,
) -> Result<f64> {
    let geometry = domain.radial().ok_or_else(|| Error::invalid("radial domain required"))?;
    let dim = cfg.dim();
    let d0 = cfg.x.iter().map(|c| c * c).sum::<f64>().sqrt();
    let big_r = cfg.radius;
    let qcfg = QuadratureConfig { rel_tol: 1e-12, ..QuadratureConfig::default() };
    let side = if dim > 2 { unit_sphere_area(dim - 1)? } else { 2.0 };
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let distance = |rho: f64, theta: f64| {
        let r = (d0 * d0 + rho * rho + 2.0 * d0 * rho * theta.cos()).max(0.0).sqrt();
        match geometry {
            RadialGeometry::Ball { radius } => (radius - r).max(0.0),
            RadialGeometry::Exterior { radius } => (r - radius).max(0.0),
        }
    };
    let mut angle_breaks = vec![0.0, std::f64::consts::PI];
    let mut t = scale.sqrt() / 8.0;
    while t < 1.0 {
        angle_breaks.push(t);
        angle_breaks.push(std::f64::consts::PI - t);
        t *= 2.0;
    }
    angle_breaks.sort_by(f64::total_cmp);
    let mut radial_breaks = vec![0.0, big_r];
    let mut s = scale / 8.0;
    while s < big_r {
        radial_breaks.push(big_r - s);
        s *= 2.0;
    }
    radial_breaks.sort_by(f64::total_cmp);
    let shell = |rho: f64| -> f64 {
        let inner = integrate_panels(&angle_breaks, |n| f(distance(rho, n.x)) * n.x.sin().powi(dim as i32 - 2), &qcfg);
        match inner {
            Ok(v) => side * v * rho.powi(dim as i32 - 1),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    // for N = 2 the angular range [0, π] covers half the circle
    let total = integrate_panels(&radial_breaks, |n| shell(n.x), &qcfg)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(total / ball_volume(dim, big_r))
}

/// One line of a q-mean sweep.
#[derive(Debug, Clone, Serialize)]
pub struct QMeanRow {
    pub eps: f64,
    pub xi: f64,
    pub mu: f64,
    /// `(R/ε)^{(N+1)/(2(q-1))} μ`, or `μ` for `q = ∞`
    pub scaled: f64,
    pub prediction: f64,
    pub ratio: f64,
    pub residual: f64,
    pub path: String,
    pub ill_conditioned: bool,
}

/// Sampling and barrier radii for sweeps on non-radial domains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BarrierSetup {
    pub r_i: f64,
    pub r_e: f64,
    pub monte_carlo: MonteCarloConfig,
}

/// Scaled q-means along `eps_list` with the predicted limit. Radial
/// domains use the exact solution; other domains give one `barrier-U` and one
/// `barrier-V` row per `ε` from a common sample.
pub fn qmean_limit_experiment(
    domain: &DomainOracle,
    cfg: &TouchingBallConfig,
    p: Exponent,
    q: Exponent,
    eps_list: &[f64],
    barriers: Option<BarrierSetup>,
) -> Result<Vec<QMeanRow>> {
    let dim = cfg.dim();
    let prediction = match q {
        Exponent::Finite(qv) => limit_prediction(p, qv, cfg)?,
        Exponent::Infinity => 0.5,
    };
    let rows: Vec<Result<Vec<QMeanRow>>> = eps_list
        .par_iter()
        .map(|&eps| {
            let params = ProblemParams::new(dim, p, eps)?;
            let xi = params.xi();
            let query = QMeanQuery::new(cfg.clone(), q, xi)?;
            let eps_scale = match q {
                Exponent::Finite(_) => (cfg.radius / eps).powf(query.scaling_exponent()),
                Exponent::Infinity => 1.0,
            };
            let row = |r: QMeanResult, path: &str| QMeanRow {
                eps,
                xi,
                mu: r.mu,
                scaled: r.mu * eps_scale,
                prediction,
                ratio: r.mu * eps_scale / prediction,
                residual: r.residual,
                path: path.to_string(),
                ill_conditioned: r.ill_conditioned,
            };
            match domain.radial() {
                Some(geometry) => {
                    let profile = Profile::Solution(RadialSolution::new(params, geometry)?);
                    let r = q_mean(domain, &query, &profile)?;
                    let path = if r.path == QMeanPath::Midrange { "midrange" } else { "coarea" };
                    Ok(vec![row(r, path)])
                }
                None => {
                    let setup = barriers.ok_or_else(|| Error::invalid("barrier radii required off radial domains"))?;
                    let b = EnhancedBarriers::new(params, setup.r_i, setup.r_e)?;
                    let max_tau = 2.0 * cfg.radius / xi;
                    let lower = Profile::BarrierU(b.clone()).tabulated(max_tau, 20_000)?;
                    let upper = Profile::BarrierV(b).tabulated(max_tau, 20_000)?;
                    let sampler = BallSampler::new(cfg.x.clone(), cfg.radius, setup.monte_carlo)?;
                    let distances = sampler.values(|y| domain.distance(y).unwrap_or(f64::NAN));
                    let eval = |prof: &Profile| -> Result<Vec<Vec<f64>>> {
                        distances.iter().map(|s| s.iter().map(|&d| prof.eval(d / xi)).collect()).collect()
                    };
                    let ru = q_mean_from_values(&query, &eval(&lower)?)?;
                    let rv = q_mean_from_values(&query, &eval(&upper)?)?;
                    Ok(vec![row(ru, "barrier-U"), row(rv, "barrier-V")])
                }
            }
        })
        .collect();
    let mut out = Vec::new();
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}
