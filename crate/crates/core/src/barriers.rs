//! Comparison barriers for general domains.
//!
//! The crude pair `E`, `e` bounds `ε log u + √p' d_Γ` from above and below on
//! any domain. Under uniform interior and exterior ball conditions the
//! enhanced pair `U ≤ u ≤ V` holds as functions of the scaled distance
//! `τ = √p' d_Γ/ε`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::quadrature::{sin_family, sinh_family, LogValue, QuadratureConfig};
use crate::radial::{log_cosh, RadialGeometry, RadialSolution};

fn check_distance(name: &str, d: f64) -> Result<()> {
    if d >= 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be a finite nonnegative distance, got {d}")))
    }
}

/// Upper factor `E_p^ε(d)`: the ball solution of radius `d` at its centre,
/// times `e^{√p' d/ε}`.
pub fn upper_e(params: &ProblemParams, distance: f64) -> Result<LogValue> {
    upper_e_with(params, distance, &QuadratureConfig::default())
}

pub fn upper_e_with(params: &ProblemParams, distance: f64, cfg: &QuadratureConfig) -> Result<LogValue> {
    check_distance("distance", distance)?;
    if distance == 0.0 {
        return Ok(LogValue::ONE);
    }
    match params.alpha() {
        None => {
            let t = (-2.0 * distance / params.eps()).exp();
            Ok(LogValue::from_log(std::f64::consts::LN_2 - t.ln_1p()))
        }
        Some(alpha) => {
            let full = sin_family(0.0, alpha, cfg)?;
            let damped = sin_family(params.tau(distance), alpha, cfg)?;
            Ok(full / damped)
        }
    }
}

/// Lower factor `e_{p,z}^ε(x)` from the exterior solution of the ball
/// `B_{d_Γ(z)}(z)`; equals one for `p = ∞`.
pub fn lower_e(params: &ProblemParams, dist_x_z: f64, dist_gamma_z: f64) -> Result<LogValue> {
    lower_e_with(params, dist_x_z, dist_gamma_z, &QuadratureConfig::default())
}

pub fn lower_e_with(
    params: &ProblemParams,
    dist_x_z: f64,
    dist_gamma_z: f64,
    cfg: &QuadratureConfig,
) -> Result<LogValue> {
    check_distance("|x - z|", dist_x_z)?;
    check_distance("d(z)", dist_gamma_z)?;
    let Some(alpha) = params.alpha() else {
        return Ok(LogValue::ONE);
    };
    if dist_gamma_z == 0.0 {
        return Err(Error::invalid("z must lie at positive distance from the boundary"));
    }
    if dist_x_z == dist_gamma_z {
        return Ok(LogValue::ONE);
    }
    let num = sinh_family(params.tau(dist_x_z), alpha, cfg)?;
    let den = sinh_family(params.tau(dist_gamma_z), alpha, cfg)?;
    Ok(num / den)
}

/// The pair `U^ε`, `V^ε` for interior ball radius `r_i` and exterior ball
/// radius `r_e`.
///
/// `U` is built from `σ_e = √p' r_e/ε`. The first branch of `V` comes from the
/// interior ball and uses `σ_i = √p' r_i/ε`, both for the measure and for the
/// branch switch.
#[derive(Debug, Clone)]
pub struct EnhancedBarriers {
    params: ProblemParams,
    r_i: f64,
    r_e: f64,
    cfg: QuadratureConfig,
    // log F(σ_e), log S(σ_i), log S(0); unused for p = ∞
    log_f_e: f64,
    log_s_i: f64,
    log_s_0: f64,
}

impl EnhancedBarriers {
    pub fn new(params: ProblemParams, r_i: f64, r_e: f64) -> Result<Self> {
        Self::with_config(params, r_i, r_e, QuadratureConfig::default())
    }

    pub fn with_config(params: ProblemParams, r_i: f64, r_e: f64, cfg: QuadratureConfig) -> Result<Self> {
        for (name, r) in [("r_i", r_i), ("r_e", r_e)] {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {r}")));
            }
        }
        let mut b = Self { params, r_i, r_e, cfg, log_f_e: 0.0, log_s_i: 0.0, log_s_0: 0.0 };
        if let Some(alpha) = params.alpha() {
            b.log_f_e = sinh_family(b.sigma_e(), alpha, &cfg)?.ln();
            b.log_s_i = sin_family(b.sigma_i(), alpha, &cfg)?.ln();
            b.log_s_0 = sin_family(0.0, alpha, &cfg)?.ln();
        }
        Ok(b)
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn r_i(&self) -> f64 {
        self.r_i
    }

    pub fn r_e(&self) -> f64 {
        self.r_e
    }

    pub fn sigma_e(&self) -> f64 {
        self.params.tau(self.r_e)
    }

    pub fn sigma_i(&self) -> f64 {
        self.params.tau(self.r_i)
    }

    /// `U^ε(τ) = ∫ e^{-τ cosh θ} dν^{σ_e}`.
    pub fn enhanced_u(&self, tau: f64) -> Result<LogValue> {
        check_distance("tau", tau)?;
        if tau == 0.0 {
            return Ok(LogValue::ONE);
        }
        match self.params.alpha() {
            None => Ok(LogValue::from_log(-tau)),
            Some(alpha) => {
                let shifted = sinh_family(self.sigma_e() + tau, alpha, &self.cfg)?.ln();
                Ok(LogValue::from_log(-tau + shifted - self.log_f_e))
            }
        }
    }

    /// `V^ε(τ)`, evaluated branch by branch.
    pub fn enhanced_v(&self, tau: f64) -> Result<LogValue> {
        check_distance("tau", tau)?;
        if tau == 0.0 {
            return Ok(LogValue::ONE);
        }
        let sigma = self.sigma_i();
        let log = match self.params.alpha() {
            None if tau < sigma => log_cosh(sigma - tau) - log_cosh(sigma),
            None => -log_cosh(tau),
            Some(alpha) if tau < sigma => -tau + sin_family(sigma - tau, alpha, &self.cfg)?.ln() - self.log_s_i,
            Some(alpha) => self.log_s_0 - tau - sin_family(tau, alpha, &self.cfg)?.ln(),
        };
        Ok(LogValue::from_log(log))
    }
}

/// One row of a barrier table on a radial domain.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BarrierRow {
    pub r: f64,
    pub tau: f64,
    pub log_u_lower: f64,
    pub log_u: f64,
    pub log_v_upper: f64,
}

impl BarrierRow {
    /// Largest signed violation of `log U ≤ log u ≤ log V`.
    pub fn violation(&self) -> f64 {
        (self.log_u_lower - self.log_u).max(self.log_u - self.log_v_upper)
    }
}

/// Ball radii admitted by a radial domain: `r_i = r_e = R` on the ball,
/// `r_e = R` and `r_i = R` outside it.
pub fn radial_barriers(params: ProblemParams, geometry: RadialGeometry) -> Result<EnhancedBarriers> {
    let radius = geometry.radius();
    EnhancedBarriers::new(params, radius, radius)
}

/// `(τ, log U, log u, log V)` at each grid radius.
pub fn barrier_table(params: ProblemParams, geometry: RadialGeometry, r_grid: &[f64]) -> Result<Vec<BarrierRow>> {
    let solution = RadialSolution::new(params, geometry)?;
    let barriers = radial_barriers(params, geometry)?;
    r_grid
        .iter()
        .map(|&r| {
            let d = geometry.distance(r)?;
            let tau = params.tau(d);
            Ok(BarrierRow {
                r,
                tau,
                log_u_lower: barriers.enhanced_u(tau)?.ln(),
                log_u: solution.eval_log_u(r)?,
                log_v_upper: barriers.enhanced_v(tau)?.ln(),
            })
        })
        .collect()
}

/// Largest signed violation of the sandwich over `r_grid`, in log form.
pub fn sandwich_check(params: ProblemParams, geometry: RadialGeometry, r_grid: &[f64]) -> Result<f64> {
    if r_grid.is_empty() {
        return Err(Error::EmptyTable);
    }
    Ok(barrier_table(params, geometry, r_grid)?.iter().map(BarrierRow::violation).fold(f64::NEG_INFINITY, f64::max))
}

/// Evenly spaced radii covering a radial domain (`n ≥ 2`); the exterior grid
/// runs out to `R + extent`.
pub fn radial_grid(geometry: RadialGeometry, n: usize, extent: f64) -> Vec<f64> {
    let (lo, hi) = match geometry {
        RadialGeometry::Ball { radius } => (0.0, radius),
        RadialGeometry::Exterior { radius } => (radius, radius + extent),
    };
    let n = n.max(2);
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// The three members of the chain
/// `lower ≤ ε log u + √p' d_Γ(x) ≤ upper` at one point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChainValues {
    pub lower: f64,
    pub middle: f64,
    pub upper: f64,
}

impl ChainValues {
    pub fn holds(&self, tol: f64) -> bool {
        self.lower <= self.middle + tol && self.middle <= self.upper + tol
    }
}

/// Evaluates the chain on the exterior of `B_R(0)` for a point `x` of the
/// domain and a point `z` inside the ball.
pub fn exterior_chain(params: ProblemParams, radius: f64, x: &[f64], z: &[f64]) -> Result<ChainValues> {
    if x.len() != params.dim() || z.len() != params.dim() {
        return Err(Error::invalid("points must have the problem dimension"));
    }
    let norm = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>().sqrt();
    let geometry = RadialGeometry::Exterior { radius };
    let rx = norm(x);
    let d_x = geometry.distance(rx)?;
    let d_z = radius - norm(z);
    if d_z <= 0.0 {
        return Err(Error::OutsideDomain("z must lie inside the removed ball".into()));
    }
    let x_z = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let eps = params.eps();
    let sp = params.sqrt_p_conj();
    let solution = RadialSolution::new(params, geometry)?;
    Ok(ChainValues {
        lower: sp * (-x_z + d_x + d_z) + eps * lower_e(&params, x_z, d_z)?.ln(),
        middle: eps * solution.eval_log_u(rx)? + sp * d_x,
        upper: eps * upper_e(&params, d_x)?.ln(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Exponent;

    fn params(n: usize, p: Exponent, eps: f64) -> ProblemParams {
        ProblemParams::new(n, p, eps).unwrap()
    }

    #[test]
    fn upper_e_examples() {
        let pr = params(2, Exponent::Finite(3.0), 0.1);
        assert_eq!(upper_e(&pr, 0.0).unwrap().ln(), 0.0);
        let inf = params(2, Exponent::Infinity, 0.1);
        let v = upper_e(&inf, 1.0).unwrap().value();
        assert!((v - 2.0 / (1.0 + (-20.0f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn upper_e_matches_ball_centre() {
        // u on B_d at its centre equals e^{-√p' d/ε} E(d)
        for p in [Exponent::Finite(1.5), Exponent::Finite(3.0), Exponent::Infinity] {
            let pr = params(3, p, 0.07);
            let ball = RadialSolution::new(pr, RadialGeometry::Ball { radius: 0.6 }).unwrap();
            let lhs = ball.eval_log_u(0.0).unwrap() + pr.tau(0.6);
            let rhs = upper_e(&pr, 0.6).unwrap().ln();
            assert!((lhs - rhs).abs() < 1e-10, "{p}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn upper_e_log_eps_rate() {
        // ε log E ≈ -ε (α+1)/2 log ε + O(ε): the difference of slopes stays bounded
        let alpha = 1.0;
        let d = 1.0;
        let mut prev = None;
        for eps in [1e-2, 1e-3, 1e-4] {
            let pr = params(3, Exponent::Finite(2.0), eps);
            let scaled = upper_e(&pr, d).unwrap().ln() + (alpha + 1.0) / 2.0 * eps.ln();
            if let Some(p) = prev {
                assert!(((scaled - p) as f64).abs() < 0.1);
            }
            prev = Some(scaled);
        }
    }

    #[test]
    fn lower_e_examples() {
        let inf = params(2, Exponent::Infinity, 0.1);
        assert_eq!(lower_e(&inf, 2.0, 0.5).unwrap().ln(), 0.0);
        let pr = params(2, Exponent::Finite(1.5), 0.1);
        assert_eq!(lower_e(&pr, 0.5, 0.5).unwrap().ln(), 0.0);
        assert!(lower_e(&pr, 0.5, 0.0).is_err());
        let mut prev = f64::INFINITY;
        for eps in [1e-1, 1e-2, 1e-3] {
            let pr = params(3, Exponent::Finite(2.5), eps);
            let v = (eps * lower_e(&pr, 1.5, 0.5).unwrap().ln()).abs();
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 5e-3);
    }

    #[test]
    fn enhanced_examples_at_infinity() {
        let b = EnhancedBarriers::new(params(2, Exponent::Infinity, 0.1), 1.0, 1.0).unwrap();
        assert_eq!(b.enhanced_u(0.0).unwrap().ln(), 0.0);
        assert!((b.enhanced_u(3.0).unwrap().ln() + 3.0).abs() < 1e-15);
        let s = b.sigma_i();
        let v = b.enhanced_v(s / 2.0).unwrap().value();
        assert!((v - (s / 2.0).cosh() / s.cosh()).abs() < 1e-15);
        let v = b.enhanced_v(s + 1.0).unwrap().value();
        assert!((v - 1.0 / (s + 1.0).cosh()).abs() < 1e-15);
    }

    #[test]
    fn enhanced_u_below_pure_exponential() {
        let b = EnhancedBarriers::new(params(3, Exponent::Finite(2.0), 0.1), 0.5, 0.8).unwrap();
        for tau in [0.1, 1.0, 4.0, 20.0] {
            let scaled = b.enhanced_u(tau).unwrap().ln() + tau;
            assert!(scaled <= 1e-14 && scaled > -50.0);
        }
    }

    #[test]
    fn sandwich_examples() {
        let ball = RadialGeometry::Ball { radius: 1.0 };
        let pr = params(2, Exponent::Finite(2.0), 0.1);
        assert!(sandwich_check(pr, ball, &radial_grid(ball, 50, 0.0)).unwrap() <= 1e-9);

        let ext = RadialGeometry::Exterior { radius: 1.0 };
        let pr = params(3, Exponent::Infinity, 0.05);
        let rows = barrier_table(pr, ext, &radial_grid(ext, 40, 2.0)).unwrap();
        for row in &rows {
            assert_eq!(row.log_u_lower, row.log_u);
            assert!(row.violation() <= 0.0);
        }

        let ball = RadialGeometry::Ball { radius: 2.0 };
        let pr = params(3, Exponent::Finite(5.0), 0.2);
        assert!(sandwich_check(pr, ball, &radial_grid(ball, 50, 0.0)).unwrap() <= 1e-9);
        assert!(matches!(sandwich_check(pr, ball, &[]), Err(Error::EmptyTable)));
    }

    #[test]
    fn chain_on_exterior() {
        let pr = params(2, Exponent::Finite(3.0), 0.1);
        let z = [0.2, -0.3];
        for x in [[1.0, 0.0], [1.5, 0.5], [-2.0, 1.0], [0.0, 3.0]] {
            let c = exterior_chain(pr, 1.0, &x, &z).unwrap();
            assert!(c.holds(1e-10), "{c:?}");
        }
        assert!(exterior_chain(pr, 1.0, &[0.5, 0.0], &z).is_err());
    }
}
