//! The one-dimensional integral `f(σ) = ∫₀^∞ e^{-σ(cosh θ-1)} (sinh θ)^α dθ`,
//! its asymptotic branches, the Bessel-K identity it satisfies, and the two
//! mollifier families built from the weights.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{gamma, ln_gamma};
use crate::quadrature::{
    self, acosh1p, integrate_panels, integrate_sin_weighted_signed, integrate_sinh_weighted_signed, LogValue,
    QuadratureConfig,
};

/// At or above this σ the large-σ branch is reported.
pub const LARGE_SIGMA: f64 = 10.0;
/// At or below this σ the small-σ branches are reported.
pub const SMALL_SIGMA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    LargeSigma,
    SmallSigmaAlphaPos,
    SmallSigmaAlphaZero,
    SmallSigmaAlphaNeg,
}

/// Leading term of `f` in one asymptotic regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticBranch {
    pub regime: Regime,
    /// log of the leading term
    pub leading: f64,
    pub error_order: &'static str,
    /// Set for `-1 < α < 0`: the closed-form constant is used by magnitude
    /// because its printed form is negative while `f > 0`.
    pub sign_discrepancy: bool,
}

fn check(sigma: f64, alpha: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    if !(alpha > -1.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha must exceed -1, got {alpha}")));
    }
    Ok(())
}

/// `f(σ)` by quadrature.
pub fn f_exact(sigma: f64, alpha: f64, cfg: &QuadratureConfig) -> Result<LogValue> {
    check(sigma, alpha)?;
    quadrature::sinh_family(sigma, alpha, cfg)
}

/// Small-σ limit `∫₀^∞ (sinh θ)^α dθ` for `-1 < α < 0`, i.e. the magnitude of
/// `√π/(2 sin(απ/2)) · Γ((α+1)/2)/Γ(α/2+1)`.
pub fn small_sigma_negative_alpha_limit(alpha: f64) -> f64 {
    (PI.sqrt() / (2.0 * (alpha * PI / 2.0).sin()) * gamma((alpha + 1.0) / 2.0) / gamma(alpha / 2.0 + 1.0)).abs()
}

/// Leading term of the branch selected by `(σ, sign α)`; `None` in the gap
/// `0.1 < σ < 10` where only [`f_exact`] is meaningful.
pub fn f_asymptotic(sigma: f64, alpha: f64) -> Result<Option<AsymptoticBranch>> {
    check(sigma, alpha)?;
    let branch = if sigma >= LARGE_SIGMA {
        let leading = 0.5 * (alpha - 1.0) * std::f64::consts::LN_2 + ln_gamma(0.5 * (alpha + 1.0))
            - 0.5 * (alpha + 1.0) * sigma.ln();
        AsymptoticBranch { regime: Regime::LargeSigma, leading, error_order: "1+O(1/sigma)", sign_discrepancy: false }
    } else if sigma <= SMALL_SIGMA {
        if alpha > 0.0 {
            AsymptoticBranch {
                regime: Regime::SmallSigmaAlphaPos,
                leading: -alpha * sigma.ln() + ln_gamma(alpha),
                error_order: "1+o(1)",
                sign_discrepancy: false,
            }
        } else if alpha == 0.0 {
            AsymptoticBranch {
                regime: Regime::SmallSigmaAlphaZero,
                leading: (-sigma.ln()).ln(),
                error_order: "+O(1)",
                sign_discrepancy: false,
            }
        } else {
            AsymptoticBranch {
                regime: Regime::SmallSigmaAlphaNeg,
                leading: small_sigma_negative_alpha_limit(alpha).ln(),
                error_order: "+o(1)",
                sign_discrepancy: true,
            }
        }
    } else {
        return Ok(None);
    };
    Ok(Some(branch))
}

/// `e^σ K_ν(σ) = ∫₀^∞ e^{-σ(cosh t - 1)} cosh(ν t) dt`.
pub fn bessel_k_scaled(nu: f64, sigma: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    let level = -cfg.rel_tol.ln() + 60.0;
    let mut t_max = acosh1p(level / sigma);
    for _ in 0..3 {
        t_max = acosh1p((level + nu.abs() * t_max) / sigma);
    }
    let mut breaks = vec![0.0];
    let mut step = (1.0 / sigma.sqrt()).min(0.5);
    let mut t = step;
    while t < t_max {
        breaks.push(t);
        step = (step * 1.5).min(1.0);
        t += step;
    }
    breaks.push(t_max);
    integrate_panels(
        &breaks,
        |node| {
            let t = node.x;
            let half = (0.5 * t).sinh();
            (-2.0 * sigma * half * half).exp() * (nu * t).cosh()
        },
        cfg,
    )
}

/// Relative residual of `f(σ) = π^{-1/2} Γ((α+1)/2) (σ/2)^{-α/2} e^σ K_{α/2}(σ)`
/// with both sides computed by independent quadratures.
pub fn bessel_k_identity_residual(sigma: f64, alpha: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(0.1..=100.0).contains(&sigma) {
        return Err(Error::invalid(format!("sigma must lie in [0.1, 100], got {sigma}")));
    }
    if !(alpha > -1.0 && alpha <= 0.0) {
        return Err(Error::invalid(format!("alpha must lie in (-1, 0], got {alpha}")));
    }
    let lhs = f_exact(sigma, alpha, cfg)?;
    let k = bessel_k_scaled(0.5 * alpha, sigma, cfg)?;
    let rhs = gamma(0.5 * (alpha + 1.0)) / PI.sqrt() * (0.5 * sigma).powf(-0.5 * alpha) * k;
    Ok((lhs.value() / rhs - 1.0).abs())
}

/// Which probability family: `ν^σ` on `[0, ∞)` or `μ^σ` on `[0, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MollifierKind {
    Nu,
    Mu,
}

fn weighted_signed<G: Fn(f64) -> f64>(
    kind: MollifierKind,
    sigma: f64,
    alpha: f64,
    g: G,
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Result<f64> {
    match kind {
        MollifierKind::Nu => integrate_sinh_weighted_signed(sigma, alpha, g, breaks, cfg),
        MollifierKind::Mu => integrate_sin_weighted_signed(sigma, alpha, g, breaks, cfg),
    }
}

/// `∫ g dν^σ` or `∫ g dμ^σ`.
pub fn mollifier_expectation<G: Fn(f64) -> f64>(
    g: G,
    sigma: f64,
    alpha: f64,
    kind: MollifierKind,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let mass = weighted_signed(kind, sigma, alpha, |_| 1.0, &[], cfg)?;
    let moment = weighted_signed(kind, sigma, alpha, g, &[], cfg)?;
    Ok(moment / mass)
}

/// Mass the measure puts on `θ > δ`.
pub fn tail_mass(kind: MollifierKind, sigma: f64, alpha: f64, delta: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let mass = weighted_signed(kind, sigma, alpha, |_| 1.0, &[], cfg)?;
    let tail = weighted_signed(kind, sigma, alpha, |t| if t > delta { 1.0 } else { 0.0 }, &[delta], cfg)?;
    Ok(tail / mass)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn f_exact_examples() {
        let v = f_exact(2.0, 1.0, &cfg()).unwrap();
        assert!((v.ln() - 0.5f64.ln()).abs() < 1e-12);

        let sigma: f64 = 50.0;
        let lead = 2f64.sqrt() * gamma(1.5) * sigma.powf(-1.5);
        let v = f_exact(sigma, 2.0, &cfg()).unwrap();
        assert!((v.value() / lead - 1.0).abs() < 0.05);

        // α = 0: log(1/σ) + O(1)
        let v = f_exact(1e-4, 0.0, &cfg()).unwrap();
        assert!((v.value() - (1e4f64).ln()).abs() < 2.0);
    }

    #[test]
    fn large_branch_matches_closed_form_alpha_one() {
        let b = f_asymptotic(1000.0, 1.0).unwrap().unwrap();
        assert_eq!(b.regime, Regime::LargeSigma);
        let exact = f_exact(1000.0, 1.0, &cfg()).unwrap();
        assert!((b.leading.exp() * 1000.0 - 1.0).abs() < 1e-12);
        assert!((exact.ln() - b.leading).abs() < 2e-3);
    }

    #[test]
    fn small_branch_positive_alpha_ratio_tends_to_one() {
        let ratios: Vec<f64> = [1e-3, 1e-4, 1e-5, 1e-6]
            .iter()
            .map(|&s| {
                let b = f_asymptotic(s, 0.5).unwrap().unwrap();
                assert_eq!(b.regime, Regime::SmallSigmaAlphaPos);
                (f_exact(s, 0.5, &cfg()).unwrap().ln() - b.leading).exp()
            })
            .collect();
        for w in ratios.windows(2) {
            assert!((w[1] - 1.0).abs() < (w[0] - 1.0).abs(), "{ratios:?}");
        }
        assert!((ratios[3] - 1.0).abs() < 0.01, "{ratios:?}");
    }

    #[test]
    fn small_branch_negative_alpha_approaches_finite_limit() {
        let limit = small_sigma_negative_alpha_limit(-0.5);
        let values: Vec<f64> =
            [1e-2, 1e-3, 1e-4, 1e-6].iter().map(|&s| f_exact(s, -0.5, &cfg()).unwrap().value()).collect();
        // increasing toward the limit with a gap shrinking like √σ
        for w in values.windows(2) {
            assert!(w[1] > w[0] && w[1] < limit);
        }
        let gaps: Vec<f64> = values.iter().map(|v| limit - v).collect();
        assert!(gaps[1] / gaps[0] < 0.45 && gaps[2] / gaps[1] < 0.45, "{gaps:?}");
        assert!(gaps[3] / limit < 1e-3);
        let b = f_asymptotic(1e-4, -0.5).unwrap().unwrap();
        assert!(b.sign_discrepancy);
        assert_eq!(b.regime, Regime::SmallSigmaAlphaNeg);
    }

    #[test]
    fn gap_region_has_no_branch() {
        assert!(f_asymptotic(1.0, 0.5).unwrap().is_none());
        assert!(f_asymptotic(10.0, 0.5).unwrap().is_some());
        assert!(f_asymptotic(0.1, 0.0).unwrap().is_some());
    }

    #[test]
    fn bessel_identity_examples() {
        for (s, a) in [(1.0, 0.0), (10.0, -0.5), (0.2, 0.0)] {
            let r = bessel_k_identity_residual(s, a, &cfg()).unwrap();
            assert!(r < 1e-6, "sigma={s} alpha={a} residual={r}");
        }
        assert!(bessel_k_identity_residual(0.01, 0.0, &cfg()).is_err());
        assert!(bessel_k_identity_residual(1.0, 0.5, &cfg()).is_err());
    }

    #[test]
    fn bessel_k_known_values() {
        // K_0(1) = 0.42102443824070834, K_{1/2}(x) = √(π/(2x)) e^{-x}
        let k0 = bessel_k_scaled(0.0, 1.0, &cfg()).unwrap() * (-1.0f64).exp();
        assert!((k0 - 0.421_024_438_240_708_34).abs() < 1e-13);
        let x = 3.0;
        let khalf = bessel_k_scaled(0.5, x, &cfg()).unwrap();
        assert!((khalf / (PI / (2.0 * x)).sqrt() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mollifier_total_mass_is_one() {
        for kind in [MollifierKind::Nu, MollifierKind::Mu] {
            for sigma in [0.5, 10.0, 1e3] {
                let m = mollifier_expectation(|_| 1.0, sigma, 0.5, kind, &cfg()).unwrap();
                assert!((m - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn mollifier_concentrates() {
        let seq: Vec<f64> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&s| mollifier_expectation(f64::cos, s, 1.0, MollifierKind::Mu, &cfg()).unwrap())
            .collect();
        assert!(seq[0] < seq[1] && seq[1] < seq[2] && seq[2] < 1.0, "{seq:?}");
        let second = mollifier_expectation(|t| t * t, 1e4, 1.0, MollifierKind::Nu, &cfg()).unwrap();
        assert!(second < 0.01);
        // ν^σ with α = 1: E[θ²] ≈ 2/σ for large σ
        assert!((second * 1e4 / 2.0 - 1.0).abs() < 0.01, "{second}");
    }

    #[test]
    fn tail_mass_vanishes() {
        for delta in [0.1, 0.5] {
            let t: Vec<f64> = [10.0, 100.0, 1000.0]
                .iter()
                .map(|&s| tail_mass(MollifierKind::Nu, s, 0.0, delta, &cfg()).unwrap())
                .collect();
            assert!(t[0] > t[1] && t[1] > t[2], "{t:?}");
            assert!(t[2] < 1e-2);
        }
    }
}
