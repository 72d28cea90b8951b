//! Domains, distances, curvatures and level-set areas.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{gamma, pi_gamma};
use crate::quadrature::{integrate_panels, QuadratureConfig};
use crate::radial::RadialGeometry;

/// Surface area `2π^{n/2}/Γ(n/2)` of the unit sphere in `R^n`.
pub fn unit_sphere_area(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("sphere dimension must be at least 1"));
    }
    let h = n as f64 / 2.0;
    Ok(2.0 * PI.powf(h) / gamma(h))
}

/// `|B_R| = π^{N/2} R^N / Γ(N/2 + 1)`.
pub fn ball_volume(dim: usize, radius: f64) -> f64 {
    let h = dim as f64 / 2.0;
    PI.powf(h) * radius.powi(dim as i32) / gamma(h + 1.0)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Smooth function whose negative set is the domain.
pub trait LevelSetFunction: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn hessian(&self, x: &[f64]) -> DMatrix<f64>;
}

/// `Σ x_i²/a_i² - 1`: the interior of an ellipse or ellipsoid centred at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    pub semi_axes: Vec<f64>,
}

impl Ellipsoid {
    pub fn new(semi_axes: Vec<f64>) -> Result<Self> {
        if semi_axes.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::invalid("semi-axes must be positive"));
        }
        Ok(Self { semi_axes })
    }
}

impl LevelSetFunction for Ellipsoid {
    fn dim(&self) -> usize {
        self.semi_axes.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.semi_axes).map(|(c, a)| (c / a) * (c / a)).sum::<f64>() - 1.0
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.semi_axes).map(|(c, a)| 2.0 * c / (a * a)).collect()
    }

    fn hessian(&self, _x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.semi_axes.len(),
            self.semi_axes.iter().map(|a| 2.0 / (a * a)),
        ))
    }
}

/// Quasi-uniform unit directions: equally spaced angles in 2-D, a Fibonacci
/// lattice in 3-D.
pub fn sphere_directions(dim: usize, count: usize) -> Result<Vec<Vec<f64>>> {
    match dim {
        2 => Ok((0..count)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect()),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            Ok((0..count)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let t = golden * k as f64;
                    vec![rho * t.cos(), rho * t.sin(), z]
                })
                .collect())
        }
        _ => Err(Error::invalid(format!("direction lattices exist for N = 2, 3, got {dim}"))),
    }
}

const CLOUD_2D: usize = 4096;
const CLOUD_3D: usize = 8192;

/// Bounded domain `{φ < 0}`, star-shaped about `centre`, with a precomputed
/// boundary point cloud used to seed projections.
#[derive(Clone)]
pub struct ImplicitDomain {
    function: Arc<dyn LevelSetFunction>,
    centre: Vec<f64>,
    cloud: Vec<Vec<f64>>,
}

impl fmt::Debug for ImplicitDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImplicitDomain")
            .field("dim", &self.function.dim())
            .field("centre", &self.centre)
            .field("cloud", &self.cloud.len())
            .finish()
    }
}

impl ImplicitDomain {
    /// `search_radius` must bound the distance from `centre` to the boundary.
    pub fn new(function: Arc<dyn LevelSetFunction>, centre: Vec<f64>, search_radius: f64) -> Result<Self> {
        let dim = function.dim();
        if !(2..=3).contains(&dim) || centre.len() != dim {
            return Err(Error::invalid("implicit domains are supported for N = 2, 3"));
        }
        if function.value(&centre) >= 0.0 {
            return Err(Error::invalid("centre must lie inside the domain"));
        }
        let count = if dim == 2 { CLOUD_2D } else { CLOUD_3D };
        let cloud = sphere_directions(dim, count)?
            .into_iter()
            .map(|dir| ray_crossing(function.as_ref(), &centre, &dir, search_radius))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { function, centre, cloud })
    }

    pub fn function(&self) -> &dyn LevelSetFunction {
        self.function.as_ref()
    }

    fn newton_project(&self, x: &[f64], start: &[f64]) -> Option<Vec<f64>> {
        let n = x.len();
        let f = self.function.as_ref();
        let mut y = start.to_vec();
        let g = f.gradient(&y);
        let g2: f64 = g.iter().map(|c| c * c).sum();
        let mut lambda = x.iter().zip(&y).zip(&g).map(|((a, b), c)| (a - b) * c).sum::<f64>() / g2;
        let residual = |y: &[f64], lambda: f64| -> (DVector<f64>, f64) {
            let g = f.gradient(y);
            let mut r = DVector::zeros(n + 1);
            for i in 0..n {
                r[i] = y[i] - x[i] + lambda * g[i];
            }
            r[n] = f.value(y) / norm(&g).max(f64::MIN_POSITIVE);
            let size = r.norm();
            (r, size)
        };
        let (mut r, mut size) = residual(&y, lambda);
        for _ in 0..60 {
            if size < 1e-15 {
                break;
            }
            let g = f.gradient(&y);
            let gn = norm(&g);
            let h = f.hessian(&y);
            let mut jac = DMatrix::zeros(n + 1, n + 1);
            for i in 0..n {
                for j in 0..n {
                    jac[(i, j)] = lambda * h[(i, j)] + if i == j { 1.0 } else { 0.0 };
                }
                jac[(i, n)] = g[i];
                jac[(n, i)] = g[i] / gn;
            }
            let step = jac.lu().solve(&(-&r))?;
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = (0..n).map(|i| y[i] + t * step[i]).collect();
                let trial_lambda = lambda + t * step[n];
                let (tr, ts) = residual(&trial, trial_lambda);
                if ts < size || t < 1e-6 {
                    y = trial;
                    lambda = trial_lambda;
                    r = tr;
                    size = ts;
                    break;
                }
                t *= 0.5;
            }
        }
        let g = f.gradient(&y);
        let on_surface = (f.value(&y) / norm(&g)).abs() < 1e-12 * (1.0 + norm(&y));
        on_surface.then_some(y)
    }

    fn distance_and_nearest(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let f = self.function.as_ref();
        let scale = 1.0 + norm(x);
        let value = f.value(x);
        let grad_norm = norm(&f.gradient(x));
        if value > 1e-12 * scale * grad_norm.max(1.0) {
            return Err(Error::OutsideDomain(format!("point {x:?} lies outside the implicit domain")));
        }
        let mut ranked: Vec<(f64, usize)> = self.cloud.iter().enumerate().map(|(k, c)| (dist(x, c), k)).collect();
        ranked.select_nth_unstable_by(4, |a, b| a.0.total_cmp(&b.0));
        ranked.truncate(4);
        let mut best: Option<(f64, Vec<f64>)> = None;
        for &(d0, k) in &ranked {
            let candidate = self
                .newton_project(x, &self.cloud[k])
                .map(|y| (dist(x, &y), y))
                .unwrap_or_else(|| (d0, self.cloud[k].clone()));
            if best.as_ref().is_none_or(|b| candidate.0 < b.0) {
                best = Some(candidate);
            }
        }
        Ok(best.expect("nonempty cloud"))
    }
}

/// Boundary point of `{φ < 0}` on the ray `centre + t dir`, `0 < t ≤ reach`.
fn ray_crossing(f: &dyn LevelSetFunction, centre: &[f64], dir: &[f64], reach: f64) -> Result<Vec<f64>> {
    let at = |t: f64| -> Vec<f64> { centre.iter().zip(dir).map(|(c, d)| c + t * d).collect() };
    let steps = 256;
    let mut lo = 0.0;
    let mut hi = None;
    for k in 1..=steps {
        let t = reach * k as f64 / steps as f64;
        if f.value(&at(t)) >= 0.0 {
            hi = Some(t);
            break;
        }
        lo = t;
    }
    let mut hi = hi.ok_or_else(|| Error::invalid("boundary not found within the search radius"))?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f.value(&at(mid)) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(at(hi))
}

/// Distance oracle for a domain `Ω ⊂ R^N`.
#[derive(Debug, Clone)]
pub enum DomainOracle {
    /// `B_ρ(0)`
    Ball {
        dim: usize,
        rho: f64,
    },
    /// `R^N \ closure(B_{r_e}(0))`
    ExteriorBall {
        dim: usize,
        r_e: f64,
    },
    Implicit(ImplicitDomain),
}

impl DomainOracle {
    pub fn ball(dim: usize, rho: f64) -> Result<Self> {
        Self::check_radial(dim, rho)?;
        Ok(DomainOracle::Ball { dim, rho })
    }

    pub fn exterior_ball(dim: usize, r_e: f64) -> Result<Self> {
        Self::check_radial(dim, r_e)?;
        Ok(DomainOracle::ExteriorBall { dim, r_e })
    }

    pub fn ellipsoid(semi_axes: Vec<f64>) -> Result<Self> {
        let reach = 1.01 * semi_axes.iter().cloned().fold(0.0, f64::max);
        let dim = semi_axes.len();
        let e = Ellipsoid::new(semi_axes)?;
        Ok(DomainOracle::Implicit(ImplicitDomain::new(Arc::new(e), vec![0.0; dim], reach)?))
    }

    fn check_radial(dim: usize, r: f64) -> Result<()> {
        if dim < 2 {
            return Err(Error::invalid(format!("dimension must be at least 2, got {dim}")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid(format!("radius must be positive, got {r}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainOracle::Ball { dim, .. } | DomainOracle::ExteriorBall { dim, .. } => *dim,
            DomainOracle::Implicit(d) => d.function.dim(),
        }
    }

    /// The matching radial geometry for balls and their exteriors.
    pub fn radial(&self) -> Option<RadialGeometry> {
        match *self {
            DomainOracle::Ball { rho, .. } => Some(RadialGeometry::Ball { radius: rho }),
            DomainOracle::ExteriorBall { r_e, .. } => Some(RadialGeometry::Exterior { radius: r_e }),
            DomainOracle::Implicit(_) => None,
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() || x.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("point {x:?} does not have dimension {}", self.dim())));
        }
        Ok(())
    }

    /// `(d_Γ(x), y)` with `y` a nearest boundary point. The centre of a ball
    /// maps to the boundary point on the first axis.
    pub fn distance_and_nearest(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_point(x)?;
        match self {
            DomainOracle::Ball { rho, .. } => {
                let r = norm(x);
                if r > *rho {
                    return Err(Error::OutsideDomain(format!("|x| = {r} exceeds rho = {rho}")));
                }
                let y = if r == 0.0 {
                    let mut y = vec![0.0; x.len()];
                    y[0] = *rho;
                    y
                } else {
                    x.iter().map(|c| rho * c / r).collect()
                };
                Ok((rho - r, y))
            }
            DomainOracle::ExteriorBall { r_e, .. } => {
                let r = norm(x);
                if r < *r_e {
                    return Err(Error::OutsideDomain(format!("|x| = {r} is below r_e = {r_e}")));
                }
                Ok((r - r_e, x.iter().map(|c| r_e * c / r).collect()))
            }
            DomainOracle::Implicit(d) => d.distance_and_nearest(x),
        }
    }

    pub fn distance(&self, x: &[f64]) -> Result<f64> {
        match self {
            DomainOracle::Ball { rho, .. } => {
                self.check_point(x)?;
                let r = norm(x);
                if r > *rho {
                    return Err(Error::OutsideDomain(format!("|x| = {r} exceeds rho = {rho}")));
                }
                Ok(rho - r)
            }
            DomainOracle::ExteriorBall { r_e, .. } => {
                self.check_point(x)?;
                let r = norm(x);
                if r < *r_e {
                    return Err(Error::OutsideDomain(format!("|x| = {r} is below r_e = {r_e}")));
                }
                Ok(r - r_e)
            }
            DomainOracle::Implicit(_) => Ok(self.distance_and_nearest(x)?.0),
        }
    }

    /// Cheap distance surrogate: exact for radial domains, `-φ/|∇φ|` otherwise.
    pub fn approx_distance(&self, x: &[f64]) -> f64 {
        match self {
            DomainOracle::Ball { rho, .. } => rho - norm(x),
            DomainOracle::ExteriorBall { r_e, .. } => norm(x) - r_e,
            DomainOracle::Implicit(d) => {
                let f = d.function.as_ref();
                -f.value(x) / norm(&f.gradient(x))
            }
        }
    }

    /// Principal curvatures at a boundary point with respect to the inward
    /// normal, in increasing order.
    pub fn principal_curvatures(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_point(y)?;
        let n = self.dim();
        let on_sphere = |r: f64| {
            let gap = (norm(y) - r).abs();
            if gap > 1e-9 * r {
                Err(Error::OutsideDomain(format!("point {y:?} is off the boundary by {gap}")))
            } else {
                Ok(())
            }
        };
        match self {
            DomainOracle::Ball { rho, .. } => {
                on_sphere(*rho)?;
                Ok(vec![1.0 / rho; n - 1])
            }
            DomainOracle::ExteriorBall { r_e, .. } => {
                on_sphere(*r_e)?;
                Ok(vec![-1.0 / r_e; n - 1])
            }
            DomainOracle::Implicit(d) => {
                let f = d.function.as_ref();
                let g = DVector::from_vec(f.gradient(y));
                let gn = g.norm();
                if !(gn > 1e-12) {
                    return Err(Error::Degenerate(format!("vanishing gradient at {y:?}")));
                }
                if (f.value(y) / gn).abs() > 1e-9 * (1.0 + norm(y)) {
                    return Err(Error::OutsideDomain(format!("point {y:?} is off the boundary")));
                }
                let normal = &g / gn;
                let basis = tangent_basis(&normal);
                let h = f.hessian(y);
                let shape = basis.transpose() * h * &basis / gn;
                let mut k: Vec<f64> = SymmetricEigen::new(shape).eigenvalues.iter().copied().collect();
                k.sort_by(f64::total_cmp);
                Ok(k)
            }
        }
    }
}

/// Orthonormal basis (as columns) of the complement of a unit vector.
fn tangent_basis(normal: &DVector<f64>) -> DMatrix<f64> {
    let n = normal.len();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n - 1);
    for k in 0..n {
        if cols.len() == n - 1 {
            break;
        }
        let mut v = DVector::zeros(n);
        v[k] = 1.0;
        v -= normal * normal.dot(&v);
        for c in &cols {
            v -= c * c.dot(&v);
        }
        let len = v.norm();
        if len > 1e-8 {
            cols.push(v / len);
        }
    }
    DMatrix::from_columns(&cols)
}

/// A ball `B_R(x)` with `R = d_Γ(x)` touching the boundary at the single point `y_x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TouchingBallConfig {
    pub x: Vec<f64>,
    pub radius: f64,
    pub y_x: Vec<f64>,
    pub curvatures: Vec<f64>,
}

/// Sphere directions used for the uniqueness test.
pub const TOUCH_SAMPLES: usize = 10_000;

impl TouchingBallConfig {
    /// Builds the configuration at `x`, checking `κ_j < 1/R` and that the
    /// closed ball meets the boundary only at `y_x`.
    pub fn new(domain: &DomainOracle, x: &[f64]) -> Result<Self> {
        let (radius, y_x) = domain.distance_and_nearest(x)?;
        if !(radius > 0.0) {
            return Err(Error::Degenerate("x lies on the boundary".into()));
        }
        let curvatures = domain.principal_curvatures(&y_x)?;
        pi_gamma(&curvatures, radius)?;
        let cfg = Self { x: x.to_vec(), radius, y_x, curvatures };
        cfg.check_unique_touch(domain)?;
        Ok(cfg)
    }

    fn check_unique_touch(&self, domain: &DomainOracle) -> Result<()> {
        let dim = self.x.len();
        let dirs = sphere_directions(dim, TOUCH_SAMPLES)?;
        let spacing = match dim {
            2 => 2.0 * PI / TOUCH_SAMPLES as f64,
            _ => (4.0 * PI / TOUCH_SAMPLES as f64).sqrt(),
        };
        let tol = self.radius * spacing * spacing;
        let axis: Vec<f64> = self.y_x.iter().zip(&self.x).map(|(y, x)| (y - x) / self.radius).collect();
        let cone = 0.25f64.cos();
        for dir in dirs {
            let cos = dir.iter().zip(&axis).map(|(a, b)| a * b).sum::<f64>();
            let p: Vec<f64> = self.x.iter().zip(&dir).map(|(x, d)| x + self.radius * d).collect();
            let d = domain.approx_distance(&p);
            if d < -tol {
                return Err(Error::Degenerate(format!("B_R(x) leaves the domain near {p:?}")));
            }
            if cos < cone && d < tol {
                return Err(Error::Degenerate(format!("B_R(x) touches the boundary away from y_x, near {p:?}")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn pi_gamma(&self) -> f64 {
        pi_gamma(&self.curvatures, self.radius).expect("checked at construction")
    }

    /// `ω_{N-1} (2R)^{(N-1)/2} / (N-1) · Π_Γ^{-1/2}`.
    pub fn area_ratio_limit(&self) -> f64 {
        let n = self.dim();
        let m = (n - 1) as f64;
        unit_sphere_area(n - 1).expect("N >= 2") * (2.0 * self.radius).powf(m / 2.0) / m / self.pi_gamma().sqrt()
    }
}

/// `∫₀^φ sin^n`.
fn sin_power_integral(n: usize, phi: f64) -> f64 {
    match n {
        0 => phi,
        1 => 2.0 * (0.5 * phi).sin().powi(2),
        _ => {
            let nf = n as f64;
            -phi.sin().powi(n as i32 - 1) * phi.cos() / nf + (nf - 1.0) / nf * sin_power_integral(n - 2, phi)
        }
    }
}

/// `H_{N-1}` of the part of the sphere `|y| = r_s` lying in `B_R(c)` with `|c| = D`.
pub fn sphere_in_ball_area(dim: usize, r_s: f64, centre_norm: f64, radius: f64) -> f64 {
    if r_s <= 0.0 {
        return 0.0;
    }
    let full = unit_sphere_area(dim).expect("dim >= 1") * r_s.powi(dim as i32 - 1);
    if centre_norm == 0.0 {
        return if r_s < radius { full } else { 0.0 };
    }
    // 1 - cos φ₀
    let one_minus = (radius * radius - (r_s - centre_norm).powi(2)) / (2.0 * r_s * centre_norm);
    if one_minus <= 0.0 {
        return 0.0;
    }
    if one_minus >= 2.0 {
        return full;
    }
    let phi0 = 2.0 * (0.5 * one_minus).sqrt().asin();
    let side = unit_sphere_area(dim - 1).expect("dim >= 2");
    r_s.powi(dim as i32 - 1) * side * sin_power_integral(dim - 2, phi0)
}

/// Seeded, stratified Monte Carlo over a ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonteCarloConfig {
    pub samples: usize,
    pub seed: u64,
    /// equal-volume radial shells, each with its own random stream
    pub strata: usize,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self { samples: 10_000_000, seed: 0x5eed_1e55, strata: 64 }
    }
}

/// Stratified estimate of a ball average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
}

/// Uniform points of `B_R(x)`, stratified by `|y - x|^N`.
#[derive(Debug, Clone)]
pub struct BallSampler {
    centre: Vec<f64>,
    radius: f64,
    cfg: MonteCarloConfig,
}

impl BallSampler {
    pub fn new(centre: Vec<f64>, radius: f64, cfg: MonteCarloConfig) -> Result<Self> {
        if cfg.strata == 0 || cfg.samples < 2 * cfg.strata {
            return Err(Error::invalid("need at least two samples per stratum"));
        }
        if !(radius > 0.0) {
            return Err(Error::invalid("ball radius must be positive"));
        }
        Ok(Self { centre, radius, cfg })
    }

    pub fn per_stratum(&self) -> usize {
        self.cfg.samples / self.cfg.strata
    }

    fn for_stratum<T, F: FnMut(&[f64]) -> T>(&self, k: usize, mut f: F) -> Vec<T> {
        let dim = self.centre.len();
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(k as u64);
        let strata = self.cfg.strata as f64;
        let mut dir = vec![0.0; dim];
        let mut point = vec![0.0; dim];
        (0..self.per_stratum())
            .map(|_| {
                let len = loop {
                    for d in dir.iter_mut() {
                        *d = rng.sample(StandardNormal);
                    }
                    let len = norm(&dir);
                    if len > 1e-300 {
                        break len;
                    }
                };
                let v: f64 = (k as f64 + rng.random::<f64>()) / strata;
                let r = self.radius * v.powf(1.0 / dim as f64);
                for i in 0..dim {
                    point[i] = self.centre[i] + r * dir[i] / len;
                }
                f(&point)
            })
            .collect()
    }

    /// Values of `f` at the sample points, grouped by stratum.
    pub fn values<F: Fn(&[f64]) -> f64 + Sync>(&self, f: F) -> Vec<Vec<f64>> {
        (0..self.cfg.strata).into_par_iter().map(|k| self.for_stratum(k, &f)).collect()
    }

    /// Stratified mean of `f` over the ball and its standard error.
    pub fn mean<F: Fn(&[f64]) -> f64 + Sync>(&self, f: F) -> Estimate {
        stratified_estimate(&self.values(f))
    }
}

/// Combines equal-weight strata into a mean and standard error.
pub fn stratified_estimate(strata: &[Vec<f64>]) -> Estimate {
    let k = strata.len() as f64;
    let mut mean = 0.0;
    let mut var = 0.0;
    for values in strata {
        let n = values.len() as f64;
        let m = values.iter().sum::<f64>() / n;
        let s2 = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
        mean += m / k;
        var += s2 / (n * k * k);
    }
    Estimate { mean, std_err: var.sqrt() }
}

fn check_level(cfg: &TouchingBallConfig, s: f64) -> Result<()> {
    if !(s > 0.0 && s < 2.0 * cfg.radius) {
        return Err(Error::invalid(format!("level {s} must lie in (0, 2R = {})", 2.0 * cfg.radius)));
    }
    Ok(())
}

/// `H_{N-1}(Γ_s ∩ B_R(x))`, in closed form for radial domains.
pub fn level_set_area(domain: &DomainOracle, cfg: &TouchingBallConfig, s: f64) -> Result<f64> {
    if s >= 2.0 * cfg.radius && s.is_finite() {
        return Ok(0.0);
    }
    check_level(cfg, s)?;
    match domain {
        DomainOracle::Ball { .. } | DomainOracle::ExteriorBall { .. } => Ok(radial_level_area(domain, cfg, s)),
        DomainOracle::Implicit(_) => {
            let h = 0.05 * s.min(2.0 * cfg.radius - s);
            Ok(band_area_monte_carlo(domain, cfg, s, h, MonteCarloConfig::default())?.mean)
        }
    }
}

fn radial_level_area(domain: &DomainOracle, cfg: &TouchingBallConfig, s: f64) -> f64 {
    let d = norm(&cfg.x);
    match *domain {
        DomainOracle::Ball { dim, rho } => sphere_in_ball_area(dim, rho - s, d, cfg.radius),
        DomainOracle::ExteriorBall { dim, r_e } => sphere_in_ball_area(dim, r_e + s, d, cfg.radius),
        DomainOracle::Implicit(_) => unreachable!("radial domains only"),
    }
}

/// `(1/2h) ∫_{s-h}^{s+h} H_{N-1}(Γ_t ∩ B_R(x)) dt` for radial domains: the
/// quantity the Monte Carlo band estimator targets.
pub fn band_average_area(domain: &DomainOracle, cfg: &TouchingBallConfig, s: f64, h: f64) -> Result<f64> {
    if domain.radial().is_none() {
        return Err(Error::invalid("closed-form band averages exist for radial domains only"));
    }
    check_band(cfg, s, h)?;
    let qcfg = QuadratureConfig::default();
    let total = integrate_panels(&[s - h, s, s + h], |n| radial_level_area(domain, cfg, n.x), &qcfg)?;
    Ok(total / (2.0 * h))
}

fn check_band(cfg: &TouchingBallConfig, s: f64, h: f64) -> Result<()> {
    if !(h > 0.0 && s - h > 0.0 && s + h < 2.0 * cfg.radius) {
        return Err(Error::invalid(format!("band [{}, {}] must lie inside (0, 2R)", s - h, s + h)));
    }
    Ok(())
}

/// Monte Carlo estimate of `(1/2h) |{y ∈ B_R(x): |d_Γ(y) - s| < h}|`.
pub fn band_area_monte_carlo(
    domain: &DomainOracle,
    cfg: &TouchingBallConfig,
    s: f64,
    h: f64,
    mc: MonteCarloConfig,
) -> Result<Estimate> {
    check_band(cfg, s, h)?;
    let sampler = BallSampler::new(cfg.x.clone(), cfg.radius, mc)?;
    let scale = ball_volume(cfg.dim(), cfg.radius) / (2.0 * h);
    let est = sampler.mean(|y| match domain.distance(y) {
        Ok(d) if (d - s).abs() < h => 1.0,
        _ => 0.0,
    });
    Ok(Estimate { mean: est.mean * scale, std_err: est.std_err * scale })
}

/// Modulus of continuity `ω` on `(0, r]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModulusKind {
    /// `L s`
    Lipschitz { constant: f64 },
    /// `c s^a`, `0 < a ≤ 1`
    Holder { constant: f64, exponent: f64 },
    /// `1 / log(1/s)`, needs `r < 1`
    LogInverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusOfContinuity {
    pub kind: ModulusKind,
    pub r: f64,
}

impl ModulusOfContinuity {
    pub fn new(kind: ModulusKind, r: f64) -> Result<Self> {
        let m = Self { kind, r };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::invalid(format!("chart radius must be positive, got {}", self.r)));
        }
        match self.kind {
            ModulusKind::Lipschitz { constant } if constant > 0.0 => Ok(()),
            ModulusKind::Holder { constant, exponent } if constant > 0.0 && exponent > 0.0 && exponent <= 1.0 => Ok(()),
            ModulusKind::LogInverse if self.r < 1.0 => Ok(()),
            _ => Err(Error::invalid(format!("invalid modulus {self:?}"))),
        }
    }

    /// `ω(s)`, continuously extended by `ω(0) = 0`.
    pub fn eval(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match self.kind {
            ModulusKind::Lipschitz { constant } => constant * s,
            ModulusKind::Holder { constant, exponent } => constant * s.powf(exponent),
            ModulusKind::LogInverse => -1.0 / s.ln(),
        }
    }

    /// `ω^{-1}(y)`.
    pub fn inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match self.kind {
            ModulusKind::Lipschitz { constant } => y / constant,
            ModulusKind::Holder { constant, exponent } => (y / constant).powf(1.0 / exponent),
            ModulusKind::LogInverse => (-1.0 / y).exp(),
        }
    }

    /// `ω` decreases to zero along `r·10^{-k}`.
    pub fn vanishes_at_zero(&self) -> bool {
        let values: Vec<f64> = (0..12).map(|k| self.eval(self.r * 10f64.powi(-4 * k))).collect();
        values.windows(2).all(|w| w[1] < w[0]) && *values.last().unwrap() < 0.1 * values[0]
    }
}

/// `ψ(ε) = min_{0≤s≤r} √(s² + (ω(s) - ε)²)`.
pub fn psi_of_eps(modulus: &ModulusOfContinuity, eps: f64) -> Result<f64> {
    psi_of_eps_with(modulus, eps, 2000)
}

/// `ψ(ε)` with `grid` uniform and `grid` logarithmic points before refinement.
pub fn psi_of_eps_with(modulus: &ModulusOfContinuity, eps: f64, grid: usize) -> Result<f64> {
    modulus.validate()?;
    if !(eps > 0.0 && eps <= modulus.eval(modulus.r)) {
        return Err(Error::invalid(format!("eps = {eps} must lie in (0, omega(r) = {}]", modulus.eval(modulus.r))));
    }
    let grid = grid.max(16);
    let r = modulus.r;
    let h = |s: f64| s * s + (modulus.eval(s) - eps).powi(2);
    let mut nodes: Vec<f64> = (0..=grid).map(|k| r * k as f64 / grid as f64).collect();
    let (lo_exp, hi_exp) = (-300.0f64, r.log10());
    nodes.extend((0..=grid).map(|k| 10f64.powf(lo_exp + (hi_exp - lo_exp) * k as f64 / grid as f64)));
    let root = modulus.inverse(eps).min(r);
    if root <= 0.0 {
        return Err(Error::invalid(format!("omega^-1({eps}) underflows; psi is below f64 range")));
    }
    nodes.push(root);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let values: Vec<f64> = nodes.iter().map(|&s| h(s)).collect();
    let k = values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(k, _)| k).unwrap();
    let (mut a, mut b) = (nodes[k.saturating_sub(1)], nodes[(k + 1).min(nodes.len() - 1)]);
    let mut best = values[k];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut hc, mut hd) = (h(c), h(d));
    for _ in 0..200 {
        if hc < hd {
            b = d;
            d = c;
            hd = hc;
            c = b - inv_phi * (b - a);
            hc = h(c);
        } else {
            a = c;
            c = d;
            hc = hd;
            d = a + inv_phi * (b - a);
            hd = h(d);
        }
        if b - a <= 1e-16 * b.abs() {
            break;
        }
    }
    best = best.min(hc).min(hd);
    // the graph point over ε is evaluated without cancellation
    best = best.min(root * root);
    Ok(best.sqrt())
}
