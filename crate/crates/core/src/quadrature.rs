//! Double-exponential quadrature for the two weighted integral families
//!
//! ```text
//! S(σ, α; g) = ∫₀^π e^{-σ(1-cos θ)} (sin θ)^α g(θ) dθ
//! F(σ, α; g) = ∫₀^∞ e^{-σ(cosh θ-1)} (sinh θ)^α g(θ) dθ
//! ```
//!
//! Both are evaluated with the peak value `e^0 = 1` at `θ = 0` already
//! factored out, so the callers can assemble ratios of exponentially large or
//! small quantities in the log domain. The interval is split into panels whose
//! widths follow the concentration scale `1/√σ`, and each panel is integrated
//! with a tanh-sinh rule. Nodes carry their distance to both panel ends so
//! that `(sin θ)^α` with `α < 0` is evaluated without cancellation next to
//! `θ = π`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Tolerances of the panel-wise tanh-sinh rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Number of step halvings allowed after the `h = 1` level.
    pub max_refinements: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-300, max_refinements: 10 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || self.max_refinements < 1 {
            return Err(Error::invalid(format!("bad quadrature config {self:?}")));
        }
        Ok(())
    }
}

/// Natural logarithm of a strictly positive quantity.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogValue(f64);

impl LogValue {
    pub const ONE: LogValue = LogValue(0.0);

    pub fn from_log(log_magnitude: f64) -> Self {
        LogValue(log_magnitude)
    }

    pub fn from_value(value: f64) -> Result<Self> {
        if value > 0.0 && value.is_finite() {
            Ok(LogValue(value.ln()))
        } else {
            Err(Error::NonPositive(value))
        }
    }

    pub fn ln(&self) -> f64 {
        self.0
    }

    /// Linear-domain value; underflows to zero for very negative logs.
    pub fn value(&self) -> f64 {
        self.0.exp()
    }
}

impl std::ops::Mul for LogValue {
    type Output = LogValue;
    fn mul(self, rhs: LogValue) -> LogValue {
        LogValue(self.0 + rhs.0)
    }
}

impl std::ops::Div for LogValue {
    type Output = LogValue;
    fn div(self, rhs: LogValue) -> LogValue {
        LogValue(self.0 - rhs.0)
    }
}

/// `log(a/b)` computed as a difference of logs.
pub fn log_ratio(a: LogValue, b: LogValue) -> f64 {
    a.0 - b.0
}

/// Quadrature node on a panel `[lo, hi]`.
#[derive(Debug, Clone, Copy)]
pub struct Node {
    pub x: f64,
    pub from_lo: f64,
    pub from_hi: f64,
    pub lo: f64,
    pub hi: f64,
}

const T_MAX: f64 = 6.0;
const MAX_LEVEL: usize = 14;
const MIN_LEVEL: usize = 3;

/// Per level: `(distance of the node from the nearer end in half-widths, weight)`.
fn abscissae() -> &'static [Vec<(f64, f64)>] {
    static TABLE: OnceLock<Vec<Vec<(f64, f64)>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        (0..=MAX_LEVEL)
            .map(|level| {
                let h = (0.5f64).powi(level as i32);
                let count = (T_MAX / h) as usize;
                (1..=count)
                    .filter(|j| level == 0 || j % 2 == 1)
                    .filter_map(|j| {
                        let t = j as f64 * h;
                        let u = FRAC_PI_2 * t.sinh();
                        let near = 2.0 / (1.0 + (2.0 * u).exp());
                        let c = u.cosh();
                        let w = FRAC_PI_2 * t.cosh() / (c * c);
                        (near > 0.0 && w > 0.0 && w.is_finite()).then_some((near, w))
                    })
                    .collect()
            })
            .collect()
    })
}

/// Tanh-sinh rule on `[lo, hi]`. `scale` is an absolute magnitude the
/// convergence test may be measured against (the running total of the
/// surrounding composite rule).
pub fn tanh_sinh<F: Fn(Node) -> f64>(lo: f64, hi: f64, f: &F, cfg: &QuadratureConfig, scale: f64) -> Result<f64> {
    if !(hi > lo) {
        return Ok(0.0);
    }
    let hw = 0.5 * (hi - lo);
    let table = abscissae();
    let max_level = (cfg.max_refinements as usize).min(MAX_LEVEL);

    let eval_pair = |near: f64| -> f64 {
        let d_near = near * hw;
        let d_far = (2.0 - near) * hw;
        let left = Node { x: lo + d_near, from_lo: d_near, from_hi: d_far, lo, hi };
        let right = Node { x: hi - d_near, from_lo: d_far, from_hi: d_near, lo, hi };
        f(left) + f(right)
    };

    let level_sum = |nodes: &[(f64, f64)], start: f64, reference: f64| -> f64 {
        let mut sum = start;
        for (i, &(near, w)) in nodes.iter().enumerate() {
            let term = w * eval_pair(near);
            sum += term;
            // tails decay double exponentially once past the bulk
            let t_frac = (i + 1) as f64 / nodes.len() as f64;
            if t_frac > 0.3 && term.abs() <= 1e-18 * reference.max(sum.abs()) {
                break;
            }
        }
        sum
    };

    let center = FRAC_PI_2 * f(Node { x: lo + hw, from_lo: hw, from_hi: hw, lo, hi });
    let mut sum = level_sum(&table[0], center, 0.0);
    let mut estimate = hw * sum;
    if !estimate.is_finite() {
        return Err(Error::NonPositive(estimate));
    }
    for level in 1..=max_level {
        let previous = estimate;
        let h = (0.5f64).powi(level as i32);
        sum += level_sum(&table[level], 0.0, sum.abs());
        estimate = hw * h * sum;
        if !estimate.is_finite() {
            return Err(Error::NonPositive(estimate));
        }
        let diff = (estimate - previous).abs();
        if estimate == 0.0 && previous == 0.0 {
            return Ok(0.0);
        }
        if level >= MIN_LEVEL && diff <= cfg.rel_tol * estimate.abs().max(scale) + cfg.abs_tol {
            return Ok(estimate);
        }
        if level == max_level {
            return Err(Error::NoConvergence { last: estimate, previous });
        }
    }
    unreachable!("max_level >= 1")
}

/// Composite tanh-sinh over consecutive breakpoints.
pub fn integrate_panels<F: Fn(Node) -> f64>(breaks: &[f64], f: F, cfg: &QuadratureConfig) -> Result<f64> {
    cfg.validate()?;
    let mut total: f64 = 0.0;
    for w in breaks.windows(2) {
        total += tanh_sinh(w[0], w[1], &f, cfg, total.abs())?;
    }
    Ok(total)
}

fn merge_breaks(mut breaks: Vec<f64>, extra: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    breaks.extend(extra.iter().copied().filter(|&b| b > lo && b < hi));
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (1.0 + b.abs()));
    breaks
}

fn check_weight_params(sigma: f64, alpha: f64) -> Result<()> {
    if !(alpha > -1.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha must exceed -1, got {alpha}")));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("sigma must be nonnegative, got {sigma}")));
    }
    Ok(())
}

/// Concentration width of the weight near `θ = 0`.
fn peak_width(sigma: f64) -> f64 {
    if sigma > 1.0 {
        1.0 / sigma.sqrt()
    } else {
        1.0
    }
}

fn sin_breaks(sigma: f64) -> Vec<f64> {
    let mut breaks = vec![0.0];
    let mut x = peak_width(sigma);
    while x < 1.0 {
        breaks.push(x);
        x *= 2.0;
    }
    breaks.extend([1.0, 2.0, PI]);
    breaks
}

#[inline]
fn pow_weight(alpha: f64, s: f64, exponent: f64) -> f64 {
    if alpha == 0.0 {
        exponent.exp()
    } else {
        (alpha * s.ln() + exponent).exp()
    }
}

/// `e^{-σ(1-cos θ)} (sin θ)^α` at a node of a panel inside `[0, π]`.
#[inline]
pub(crate) fn sin_weight(node: Node, sigma: f64, alpha: f64) -> f64 {
    let theta = node.x;
    let complement = if node.hi == PI { node.from_hi } else { PI - theta };
    let sin = if theta <= FRAC_PI_2 { theta.sin() } else { complement.sin() };
    let half = (0.5 * theta).sin();
    pow_weight(alpha, sin, -2.0 * sigma * half * half)
}

/// Signed version of the sine-weighted integral, with optional extra breakpoints
/// (discontinuities of `g`).
pub fn integrate_sin_weighted_signed<G: Fn(f64) -> f64>(
    sigma: f64,
    alpha: f64,
    g: G,
    extra_breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Result<f64> {
    check_weight_params(sigma, alpha)?;
    let breaks = merge_breaks(sin_breaks(sigma), extra_breaks, 0.0, PI);
    integrate_panels(&breaks, |node| sin_weight(node, sigma, alpha) * g(node.x), cfg)
}

/// `log ∫₀^π e^{-σ(1-cos θ)} (sin θ)^α g(θ) dθ` for `g ≥ 0`.
pub fn integrate_sin_weighted<G: Fn(f64) -> f64>(
    sigma: f64,
    alpha: f64,
    g: G,
    cfg: &QuadratureConfig,
) -> Result<LogValue> {
    LogValue::from_value(integrate_sin_weighted_signed(sigma, alpha, g, &[], cfg)?)
}

/// `∫₀^π e^{-σ(1-cos θ)} (sin θ)^α dθ` in log form.
pub fn sin_family(sigma: f64, alpha: f64, cfg: &QuadratureConfig) -> Result<LogValue> {
    integrate_sin_weighted(sigma, alpha, |_| 1.0, cfg)
}

/// `acosh(1 + x)` without cancellation for small `x`.
#[inline]
pub(crate) fn acosh1p(x: f64) -> f64 {
    (x + (x * (2.0 + x)).sqrt()).ln_1p()
}

/// Truncation point of the `[0, ∞)` family: `σ(cosh θ - 1) = -ln(rel_tol) + 50`
/// (raised so that `(sinh θ)^α` growth is covered), never below 5.
pub fn sinh_truncation(sigma: f64, alpha: f64, rel_tol: f64) -> f64 {
    let level = -rel_tol.ln() + 50.0;
    let mut theta = acosh1p(level / sigma);
    if alpha > 0.0 {
        for _ in 0..3 {
            theta = acosh1p((level + alpha * theta) / sigma);
        }
    }
    theta.max(5.0)
}

fn sinh_breaks(sigma: f64, theta_max: f64) -> Vec<f64> {
    let mut breaks = vec![0.0];
    let mut x = peak_width(sigma);
    while x < 1.0 && x < theta_max {
        breaks.push(x);
        x *= 2.0;
    }
    let mut k = 1.0;
    while k < theta_max {
        breaks.push(k);
        k += 1.0;
    }
    breaks.push(theta_max);
    breaks
}

/// `e^{-σ(cosh θ-1)} (sinh θ)^α` at a node of a panel inside `[0, ∞)`.
#[inline]
pub(crate) fn sinh_weight(node: Node, sigma: f64, alpha: f64) -> f64 {
    let theta = node.x;
    let half = (0.5 * theta).sinh();
    pow_weight(alpha, theta.sinh(), -2.0 * sigma * half * half)
}

pub fn integrate_sinh_weighted_signed<G: Fn(f64) -> f64>(
    sigma: f64,
    alpha: f64,
    g: G,
    extra_breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Result<f64> {
    check_weight_params(sigma, alpha)?;
    if sigma == 0.0 {
        return Err(Error::invalid("sigma must be positive for the [0, inf) family"));
    }
    let theta_max = sinh_truncation(sigma, alpha, cfg.rel_tol);
    let breaks = merge_breaks(sinh_breaks(sigma, theta_max), extra_breaks, 0.0, theta_max);
    integrate_panels(&breaks, |node| sinh_weight(node, sigma, alpha) * g(node.x), cfg)
}

/// `log ∫₀^∞ e^{-σ(cosh θ-1)} (sinh θ)^α g(θ) dθ` for `g ≥ 0`, `σ > 0`.
pub fn integrate_sinh_weighted<G: Fn(f64) -> f64>(
    sigma: f64,
    alpha: f64,
    g: G,
    cfg: &QuadratureConfig,
) -> Result<LogValue> {
    LogValue::from_value(integrate_sinh_weighted_signed(sigma, alpha, g, &[], cfg)?)
}

/// `log ∫₀^∞ e^{-σ(cosh θ-1)} (sinh θ)^α dθ`.
pub fn sinh_family(sigma: f64, alpha: f64, cfg: &QuadratureConfig) -> Result<LogValue> {
    integrate_sinh_weighted(sigma, alpha, |_| 1.0, cfg)
}

/// The `[0, ∞)` family after the substitution `τ = σ(cosh θ - 1)`:
///
/// ```text
/// F = σ⁻¹ ∫₀^∞ e^{-τ} (2τ/σ + τ²/σ²)^{(α-1)/2} g(acosh(1 + τ/σ)) dτ
/// ```
///
/// Shares no panels or nodes with [`integrate_sinh_weighted`].
pub fn integrate_sinh_weighted_substituted<G: Fn(f64) -> f64>(
    sigma: f64,
    alpha: f64,
    g: G,
    cfg: &QuadratureConfig,
) -> Result<LogValue> {
    check_weight_params(sigma, alpha)?;
    if sigma == 0.0 {
        return Err(Error::invalid("sigma must be positive for the [0, inf) family"));
    }
    let tau_max = -cfg.rel_tol.ln() + 100.0 + 2.0 * alpha.max(0.0) * (1.0 + sigma.recip()).ln();
    let mut breaks = vec![0.0, tau_max];
    let mut extra: Vec<f64> = (-4..8).map(|k| (2.0f64).powi(k)).collect();
    extra.extend((-3..4).map(|k| 2.0 * sigma * (2.0f64).powi(k)));
    breaks = merge_breaks(breaks, &extra, 0.0, tau_max);
    let exponent = 0.5 * (alpha - 1.0);
    let value = integrate_panels(
        &breaks,
        |node| {
            let tau = node.x;
            let x = tau / sigma;
            let base = x * (2.0 + x);
            let power = if exponent == 0.0 { 1.0 } else { (exponent * base.ln()).exp() };
            (-tau).exp() * power * g(acosh1p(x))
        },
        cfg,
    )?;
    Ok(LogValue::from_value(value)? / LogValue::from_log(sigma.ln()))
}
