//! Problem parameters, derived exponents and the closed-form limit constants.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Ellipticity exponent `p` (or a q-mean exponent `q`): either a finite real
/// or the distinguished value infinity, which always selects its own closed
/// forms and is never approximated by a large float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinity)
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            Exponent::Finite(p) => Some(p),
            Exponent::Infinity => None,
        }
    }

    /// `true` when the value is `> 1` (or infinite).
    pub fn exceeds_one(&self) -> bool {
        match *self {
            Exponent::Finite(p) => p > 1.0 && p.is_finite(),
            Exponent::Infinity => true,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
            other => other
                .parse::<f64>()
                .map(Exponent::Finite)
                .map_err(|_| Error::invalid(format!("not an exponent: {s:?}"))),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Exponent::Finite(p) => s.serialize_f64(p),
            Exponent::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => Ok(Exponent::Finite(p)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Conjugate exponent `p' = p/(p-1)`, with `p' = 1` for `p = ∞`.
pub fn conjugate(p: Exponent) -> Result<Exponent> {
    match p {
        Exponent::Infinity => Ok(Exponent::Finite(1.0)),
        Exponent::Finite(v) if v > 1.0 && v.is_finite() => Ok(Exponent::Finite(v / (v - 1.0))),
        Exponent::Finite(v) => Err(Error::invalid(format!("exponent must exceed 1, got {v}"))),
    }
}

/// `α = (N-p)/(p-1)`; only defined for finite `p`.
pub fn alpha(dim: usize, p: Exponent) -> Result<f64> {
    if dim < 2 {
        return Err(Error::invalid(format!("dimension must be at least 2, got {dim}")));
    }
    match p {
        Exponent::Infinity => Err(Error::invalid("alpha is undefined for p = inf; use the closed-form branches")),
        Exponent::Finite(v) if v > 1.0 && v.is_finite() => Ok((dim as f64 - v) / (v - 1.0)),
        Exponent::Finite(v) => Err(Error::invalid(format!("exponent must exceed 1, got {v}"))),
    }
}

/// `(N, p, ε)` triple shared by every evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    dim: usize,
    p: Exponent,
    eps: f64,
}

impl ProblemParams {
    pub fn new(dim: usize, p: Exponent, eps: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid(format!("dimension must be at least 2, got {dim}")));
        }
        if !p.exceeds_one() {
            return Err(Error::invalid(format!("exponent must exceed 1, got {p}")));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::invalid(format!("eps must be positive, got {eps}")));
        }
        Ok(Self { dim, p, eps })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self) -> Exponent {
        self.p
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.dim, self.p, eps)
    }

    /// `p'` as a plain number.
    pub fn p_conj(&self) -> f64 {
        match self.p {
            Exponent::Infinity => 1.0,
            Exponent::Finite(v) => v / (v - 1.0),
        }
    }

    pub fn sqrt_p_conj(&self) -> f64 {
        self.p_conj().sqrt()
    }

    /// `α` for finite `p`, `None` for `p = ∞`.
    pub fn alpha(&self) -> Option<f64> {
        self.p.finite().map(|v| (self.dim as f64 - v) / (v - 1.0))
    }

    /// Length scale `ξ = ε/√p'` on which the solution decays away from the boundary.
    pub fn xi(&self) -> f64 {
        self.eps / self.sqrt_p_conj()
    }

    /// Scaled distance `τ = √p' d/ε`.
    pub fn tau(&self, distance: f64) -> f64 {
        distance / self.xi()
    }
}

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// `c_{N,q} = {2^{-(N+1)/2} N! / ((q-1)^{(N+1)/2} Γ((N+1)/2))}^{1/(q-1)}`.
pub fn c_nq(dim: usize, q: f64) -> Result<f64> {
    if dim < 2 {
        return Err(Error::invalid(format!("dimension must be at least 2, got {dim}")));
    }
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::invalid(format!("q must lie in (1, inf), got {q}")));
    }
    let n = dim as f64;
    let half = (n + 1.0) / 2.0;
    let ln_inner = -half * std::f64::consts::LN_2 + ln_gamma(n + 1.0) - half * (q - 1.0).ln() - ln_gamma(half);
    Ok((ln_inner / (q - 1.0)).exp())
}

/// `Π_Γ = ∏ (1 - R κ_j)`, curvatures taken with respect to the inward normal.
pub fn pi_gamma(curvatures: &[f64], radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::invalid(format!("radius must be positive, got {radius}")));
    }
    curvatures.iter().try_fold(1.0, |acc, &k| {
        let factor = 1.0 - radius * k;
        if factor <= 0.0 || !factor.is_finite() {
            Err(Error::Degenerate(format!("curvature {k} is not below 1/R = {}", 1.0 / radius)))
        } else {
            Ok(acc * factor)
        }
    })
}

/// Constants entering the q-mean limit at one touching configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitConstants {
    pub c_nq: f64,
    pub pi_gamma: f64,
    /// `c_{N,q} / {(p')^{(N+1)/2} Π_Γ}^{1/(2(q-1))}`
    pub prediction: f64,
}

impl LimitConstants {
    pub fn new(dim: usize, p: Exponent, q: f64, curvatures: &[f64], radius: f64) -> Result<Self> {
        let c = c_nq(dim, q)?;
        let pi = pi_gamma(curvatures, radius)?;
        let p_conj = conjugate(p)?.finite().unwrap_or(1.0);
        let n = dim as f64;
        let prediction = c / (p_conj.powf((n + 1.0) / 2.0) * pi).powf(1.0 / (2.0 * (q - 1.0)));
        Ok(Self { c_nq: c, pi_gamma: pi, prediction })
    }
}
