//! Exact solutions on a ball and on the exterior of a ball.
//!
//! For finite `p` the ball solution is a ratio of `[0, π]` integrals with the
//! `θ = 0` peak factored out,
//!
//! ```text
//! log u(r) = √p'(r-R)/ε + log S(√p' r/ε) - log S(√p' R/ε)
//! ```
//!
//! and the exterior solution is the analogous ratio of `[0, ∞)` integrals with
//! the opposite sign in front of `r - R`. For `p = ∞` the closed forms
//! `cosh(r/ε)/cosh(R/ε)` and `e^{-(r-R)/ε}` are used.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{Exponent, ProblemParams};
use crate::quadrature::{sin_family, sinh_family, QuadratureConfig};

/// Radial domain: the ball `B_R` or the exterior of its closure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialGeometry {
    Ball { radius: f64 },
    Exterior { radius: f64 },
}

impl RadialGeometry {
    pub fn radius(&self) -> f64 {
        match *self {
            RadialGeometry::Ball { radius } | RadialGeometry::Exterior { radius } => radius,
        }
    }

    /// Closed-form distance to the boundary sphere.
    pub fn distance(&self, r: f64) -> Result<f64> {
        match *self {
            RadialGeometry::Ball { radius } if (0.0..=radius).contains(&r) => Ok(radius - r),
            RadialGeometry::Exterior { radius } if r >= radius && r.is_finite() => Ok(r - radius),
            _ => Err(Error::OutsideDomain(format!("radius {r} outside {self:?}"))),
        }
    }

    /// Radius of the point at distance `d` from the boundary.
    pub fn radius_at_distance(&self, d: f64) -> Result<f64> {
        match *self {
            RadialGeometry::Ball { radius } if (0.0..=radius).contains(&d) => Ok(radius - d),
            RadialGeometry::Exterior { radius } if d >= 0.0 && d.is_finite() => Ok(radius + d),
            _ => Err(Error::OutsideDomain(format!("distance {d} outside {self:?}"))),
        }
    }
}

/// `log cosh x` without overflow.
pub(crate) fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Exact solution of `u = ε² Δ_p^G u`, `u = 1` on the boundary sphere.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    params: ProblemParams,
    geometry: RadialGeometry,
    cfg: QuadratureConfig,
    /// log of the boundary-radius integral (finite `p` only)
    log_norm: f64,
}

impl RadialSolution {
    pub fn new(params: ProblemParams, geometry: RadialGeometry) -> Result<Self> {
        Self::with_config(params, geometry, QuadratureConfig::default())
    }

    pub fn with_config(params: ProblemParams, geometry: RadialGeometry, cfg: QuadratureConfig) -> Result<Self> {
        let radius = geometry.radius();
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("radius must be positive, got {radius}")));
        }
        let mut sol = Self { params, geometry, cfg, log_norm: 0.0 };
        sol.log_norm = match sol.params.alpha() {
            Some(_) => sol.log_integral(radius)?,
            None => 0.0,
        };
        Ok(sol)
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn geometry(&self) -> RadialGeometry {
        self.geometry
    }

    fn log_integral(&self, r: f64) -> Result<f64> {
        let alpha = self.params.alpha().expect("finite p");
        let sigma = self.params.sqrt_p_conj() * r / self.params.eps();
        Ok(match self.geometry {
            RadialGeometry::Ball { .. } => sin_family(sigma, alpha, &self.cfg)?.ln(),
            RadialGeometry::Exterior { .. } => sinh_family(sigma, alpha, &self.cfg)?.ln(),
        })
    }

    /// `log u^ε` at radius `r = |x|`.
    pub fn eval_log_u(&self, r: f64) -> Result<f64> {
        let d = self.geometry.distance(r)?;
        let eps = self.params.eps();
        let big_r = self.geometry.radius();
        match (self.params.p(), self.geometry) {
            (Exponent::Infinity, RadialGeometry::Ball { .. }) => Ok(log_cosh(r / eps) - log_cosh(big_r / eps)),
            (Exponent::Infinity, RadialGeometry::Exterior { .. }) => Ok(-d / eps),
            (Exponent::Finite(_), _) => {
                if d == 0.0 {
                    return Ok(0.0);
                }
                let rate = -self.params.sqrt_p_conj() * d / eps;
                Ok(rate + self.log_integral(r)? - self.log_norm)
            }
        }
    }

    pub fn eval_u(&self, r: f64) -> Result<f64> {
        Ok(self.eval_log_u(r)?.exp())
    }

    /// `log u^ε` at distance `d` from the boundary.
    pub fn log_u_at_distance(&self, d: f64) -> Result<f64> {
        self.eval_log_u(self.geometry.radius_at_distance(d)?)
    }

    /// `ε log u^ε + √p' d_Γ`: nonnegative on the ball, nonpositive outside it.
    pub fn varadhan_residual(&self, r: f64) -> Result<f64> {
        let d = self.geometry.distance(r)?;
        Ok(self.params.eps() * self.eval_log_u(r)? + self.params.sqrt_p_conj() * d)
    }

    /// Relative residual of the radial equation
    /// `ε² [(p-1) u'' + (N-1) u'/r] / p = u` (`ε² u'' = u` for `p = ∞`) by
    /// central differences with step `h`.
    pub fn ode_residual(&self, r: f64, h: f64) -> Result<f64> {
        let eps = self.params.eps();
        if !(h > 0.0) || h > eps / 10.0 {
            return Err(Error::invalid(format!("step {h} must lie in (0, eps/10 = {}]", eps / 10.0)));
        }
        let (lo, hi) = match self.geometry {
            RadialGeometry::Ball { radius } => (2.0 * h, radius - 2.0 * h),
            RadialGeometry::Exterior { radius } => (radius + 2.0 * h, f64::INFINITY),
        };
        if !(r >= lo && r <= hi) {
            return Err(Error::OutsideDomain(format!(
                "radius {r} needs a margin of 2h = {} inside {:?}",
                2.0 * h,
                self.geometry
            )));
        }
        let centre = self.eval_log_u(r)?;
        let minus = (self.eval_log_u(r - h)? - centre).exp();
        let plus = (self.eval_log_u(r + h)? - centre).exp();
        // values normalized by u(r)
        let second = (plus - 2.0 + minus) / (h * h);
        let first = (plus - minus) / (2.0 * h);
        let lhs = match self.params.p() {
            Exponent::Infinity => eps * eps * second,
            Exponent::Finite(p) => {
                let n = self.params.dim() as f64;
                eps * eps * ((p - 1.0) * second + (n - 1.0) * first / r) / p
            }
        };
        Ok((lhs - 1.0).abs())
    }
}

/// `|log u_{B_R}^ε(r) - log u_{B_1}^{ε/R}(r/R)|`, which vanishes by scale
/// invariance of the operator.
pub fn scaling_check(params: &ProblemParams, radius: f64, r: f64) -> Result<f64> {
    let big = RadialSolution::new(*params, RadialGeometry::Ball { radius })?;
    let unit = RadialSolution::new(params.with_eps(params.eps() / radius)?, RadialGeometry::Ball { radius: 1.0 })?;
    Ok((big.eval_log_u(r)? - unit.eval_log_u(r / radius)?).abs())
}
