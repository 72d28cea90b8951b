//! Parameter sweeps, rate fits and table output for the command-line driver.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::geometry::{psi_of_eps, DomainOracle, ModulusOfContinuity, MonteCarloConfig, TouchingBallConfig};
use crate::params::{Exponent, ProblemParams};
use crate::qmeans::{qmean_limit_experiment, BarrierSetup, QMeanRow};
use crate::radial::{RadialGeometry, RadialSolution};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "RESOLVENT_ASYM_THREADS";

/// Sizes the global thread pool from [`THREADS_ENV`], if set.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Config(e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<Exponent> for Cell {
    fn from(v: Exponent) -> Self {
        match v {
            Exponent::Finite(p) => Cell::Num(p),
            Exponent::Infinity => Cell::Text("inf".into()),
        }
    }
}

/// Twelve significant digits.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        // no "-0" in tables
        let v = if v == 0.0 { 0.0 } else { v };
        format!("{v:.11e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format_number(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map(Value::Number).unwrap_or(Value::Null),
            Cell::Int(v) => json!(v),
            Cell::Bool(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

/// Rows under named columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::invalid(format!("row has {} cells for {} columns", row.len(), self.columns.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> Result<String> {
        if self.is_empty() {
            return Err(Error::EmptyTable);
        }
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        Ok(out)
    }

    /// `{"metadata": ..., "rows": [...]}` with one object per row.
    pub fn to_json(&self, metadata: &Value) -> Result<String> {
        if self.is_empty() {
            return Err(Error::EmptyTable);
        }
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                Value::Object(obj)
            })
            .collect();
        let doc = json!({ "metadata": metadata, "rows": rows });
        let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::Config(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    /// `.json` selects JSON, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => OutputFormat::Json,
            _ => OutputFormat::Csv,
        }
    }
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::invalid(format!("unknown format {s:?}"))),
        }
    }
}

/// Metadata block for JSON output.
pub fn metadata(command: &str, config: &Value, seed: Option<u64>) -> Value {
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "seed": seed,
    })
}

pub fn render(table: &Table, format: OutputFormat, metadata: &Value) -> Result<String> {
    match format {
        OutputFormat::Csv => table.to_csv(),
        OutputFormat::Json => table.to_json(metadata),
    }
}

/// Writes the table to `path`.
pub fn emit(table: &Table, format: OutputFormat, path: &Path, metadata: &Value) -> Result<()> {
    let text = render(table, format, metadata)?;
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// `start · factor^k` for `k < count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsSequence {
    pub start: f64,
    pub factor: f64,
    pub count: usize,
}

impl EpsSequence {
    pub fn validate(&self) -> Result<()> {
        if !(self.start > 0.0 && self.start.is_finite()) {
            return Err(Error::Config(format!("eps start must be positive, got {}", self.start)));
        }
        if !(self.factor > 0.0 && self.factor < 1.0) {
            return Err(Error::Config(format!(
                "eps factor must lie in (0, 1) for a decreasing sequence, got {}",
                self.factor
            )));
        }
        if self.count < 4 {
            return Err(Error::Config(format!("need at least 4 eps values, got {}", self.count)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.start * self.factor.powi(k as i32)).collect()
    }
}

/// Domain and touching ball of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryConfig {
    /// `B_ρ(0)`; the touching ball has radius `touching_radius` (default `ρ/2`)
    Ball { radius: f64, touching_radius: Option<f64> },
    /// outside `B_{r_e}(0)`; touching radius defaults to `r_e`
    Exterior { radius: f64, touching_radius: Option<f64> },
    /// ellipse or ellipsoid with barrier radii for the q-mean bracket
    Ellipsoid { semi_axes: Vec<f64>, x: Vec<f64>, r_i: f64, r_e: f64 },
}

impl GeometryConfig {
    pub fn radial(&self) -> Option<RadialGeometry> {
        match *self {
            GeometryConfig::Ball { radius, .. } => Some(RadialGeometry::Ball { radius }),
            GeometryConfig::Exterior { radius, .. } => Some(RadialGeometry::Exterior { radius }),
            GeometryConfig::Ellipsoid { .. } => None,
        }
    }

    /// Domain oracle and touching-ball configuration in dimension `dim`
    /// (ignored for ellipsoids, which carry their own).
    pub fn build(&self, dim: usize) -> Result<(DomainOracle, TouchingBallConfig)> {
        let on_axis = |t: f64| {
            let mut x = vec![0.0; dim];
            x[0] = t;
            x
        };
        let (domain, x) = match self {
            GeometryConfig::Ball { radius, touching_radius } => {
                let r = touching_radius.unwrap_or(0.5 * radius);
                (DomainOracle::ball(dim, *radius)?, on_axis(radius - r))
            }
            GeometryConfig::Exterior { radius, touching_radius } => {
                let r = touching_radius.unwrap_or(*radius);
                (DomainOracle::exterior_ball(dim, *radius)?, on_axis(radius + r))
            }
            GeometryConfig::Ellipsoid { semi_axes, x, .. } => (DomainOracle::ellipsoid(semi_axes.clone())?, x.clone()),
        };
        let cfg = TouchingBallConfig::new(&domain, &x)?;
        Ok((domain, cfg))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub samples: usize,
    #[serde(default = "default_strata")]
    pub strata: usize,
}

fn default_strata() -> usize {
    MonteCarloConfig::default().strata
}

fn default_dims() -> Vec<usize> {
    vec![2]
}

fn default_p() -> Vec<Exponent> {
    vec![Exponent::Finite(2.0)]
}

fn default_q() -> Vec<Exponent> {
    vec![Exponent::Finite(2.0)]
}

fn default_radii() -> Vec<f64> {
    vec![0.0]
}

/// One JSON document describing a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
    #[serde(default = "default_p")]
    pub p_values: Vec<Exponent>,
    #[serde(default = "default_q")]
    pub q_values: Vec<Exponent>,
    pub eps: EpsSequence,
    pub geometry: GeometryConfig,
    /// evaluation radii for Varadhan sweeps
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    #[serde(default)]
    pub modulus: Option<ModulusOfContinuity>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<OutputFormat>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sampling: Option<SamplingConfig>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.eps.validate()?;
        if self.dims.is_empty() || self.p_values.is_empty() || self.q_values.is_empty() {
            return Err(Error::Config("dims, p_values and q_values must be nonempty".into()));
        }
        if let Some(p) = self.p_values.iter().find(|p| !p.exceeds_one()) {
            return Err(Error::Config(format!("p must exceed 1, got {p}")));
        }
        if let Some(q) = self.q_values.iter().find(|q| !q.exceeds_one()) {
            return Err(Error::Config(format!("q must exceed 1, got {q}")));
        }
        if let Some(m) = &self.modulus {
            m.validate()?;
        }
        Ok(())
    }

    pub fn output_format(&self) -> OutputFormat {
        self.format.or_else(|| self.output.as_deref().map(OutputFormat::from_path)).unwrap_or_default()
    }

    pub fn monte_carlo(&self) -> MonteCarloConfig {
        let base = MonteCarloConfig { seed: self.seed, ..MonteCarloConfig::default() };
        match self.sampling {
            Some(s) => MonteCarloConfig { samples: s.samples, strata: s.strata, ..base },
            None => base,
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).unwrap_or(Value::Null)
    }
}

/// Rate shapes: `ε`, `ε log(1/ε)`, `ε log|log ψ(ε)|`, `ε |log ψ(ε)|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RateModel {
    Eps,
    EpsLog,
    EpsLoglogPsi,
    EpsLogPsi,
}

impl RateModel {
    /// Model value; `psi` is needed by the two `ψ` shapes.
    pub fn eval(&self, eps: f64, psi: Option<f64>) -> Result<f64> {
        let need_psi = || psi.ok_or_else(|| Error::invalid("this rate model needs psi(eps)"));
        let v = match self {
            RateModel::Eps => eps,
            RateModel::EpsLog => eps * (1.0 / eps).ln(),
            RateModel::EpsLoglogPsi => eps * need_psi()?.ln().abs().ln(),
            RateModel::EpsLogPsi => eps * need_psi()?.ln().abs(),
        };
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::invalid(format!("rate model {self:?} is not positive at eps = {eps}")))
        }
    }

    /// Shape for a ball benchmark at exponent `p`.
    pub fn for_exponent(p: Exponent) -> Self {
        if p.is_infinite() {
            RateModel::Eps
        } else {
            RateModel::EpsLog
        }
    }
}

/// Fit of `|residual| ≈ C · model(ε)` with the shape fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub model: RateModel,
    pub coefficient: f64,
    pub r_squared: f64,
    pub max_ratio: f64,
    /// the last ratio is at most twice the median ratio
    pub bounded: bool,
    /// some residuals were zero and left out of the log fit
    pub degenerate: bool,
}

impl RateFit {
    /// `r² ≥ 0.98`.
    pub fn matched(&self) -> bool {
        self.r_squared >= 0.98
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Unit-slope least squares of `log|r|` against `log model`.
pub fn fit_rate(model: RateModel, eps: &[f64], residuals: &[f64], psi: Option<&[f64]>) -> Result<RateFit> {
    if eps.len() != residuals.len() || eps.is_empty() {
        return Err(Error::invalid("eps and residual sequences must have equal nonzero length"));
    }
    let g = eps.iter().enumerate().map(|(k, &e)| model.eval(e, psi.map(|p| p[k]))).collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = residuals.iter().zip(&g).map(|(r, g)| r.abs() / g).collect();
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let bounded = *ratios.last().unwrap() <= 2.0 * median(&ratios);
    let logs: Vec<(f64, f64)> =
        residuals.iter().zip(&g).filter(|(r, _)| r.abs() > 0.0).map(|(r, g)| (r.abs().ln(), g.ln())).collect();
    let degenerate = logs.len() < residuals.len();
    if logs.is_empty() {
        return Ok(RateFit { model, coefficient: 0.0, r_squared: f64::NAN, max_ratio, bounded, degenerate });
    }
    let n = logs.len() as f64;
    let log_c = logs.iter().map(|(y, x)| y - x).sum::<f64>() / n;
    let mean_y = logs.iter().map(|(y, _)| y).sum::<f64>() / n;
    let ss_res: f64 = logs.iter().map(|(y, x)| (y - x - log_c).powi(2)).sum();
    let ss_tot: f64 = logs.iter().map(|(y, _)| (y - mean_y).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { f64::NAN };
    Ok(RateFit { model, coefficient: log_c.exp(), r_squared, max_ratio, bounded, degenerate })
}

/// Fit for one `(N, p, r)` series of a Varadhan sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesFit {
    pub dim: usize,
    pub p: Exponent,
    pub r: f64,
    pub fit: RateFit,
    /// `|residual|` decreases along the sweep
    pub monotone: bool,
    /// radial shape with the best `r²`; a diagnostic only
    pub best_model: RateModel,
}

#[derive(Debug, Clone)]
pub struct VaradhanReport {
    pub table: Table,
    pub fits: Vec<SeriesFit>,
}

/// `ε log u^ε(r) + √p' d_Γ(r)` along the ε-sequence at each radius, with a
/// rate fit per series.
pub fn run_varadhan_sweep(cfg: &SweepConfig) -> Result<VaradhanReport> {
    let geometry = cfg
        .geometry
        .radial()
        .ok_or_else(|| Error::Config("Varadhan sweeps need a ball or exterior geometry".into()))?;
    let eps = cfg.eps.values();
    let mut table = Table::new(&["N", "p", "r", "eps", "residual", "model", "ratio"]);
    let mut fits = Vec::new();
    for &dim in &cfg.dims {
        for &p in &cfg.p_values {
            let model = RateModel::for_exponent(p);
            for &r in &cfg.radii {
                let residuals = eps
                    .par_iter()
                    .map(|&e| RadialSolution::new(ProblemParams::new(dim, p, e)?, geometry)?.varadhan_residual(r))
                    .collect::<Result<Vec<f64>>>()?;
                for (&e, &res) in eps.iter().zip(&residuals) {
                    let g = model.eval(e, None)?;
                    table.push(vec![
                        dim.into(),
                        p.into(),
                        r.into(),
                        e.into(),
                        res.into(),
                        g.into(),
                        (res.abs() / g).into(),
                    ])?;
                }
                let fit = fit_rate(model, &eps, &residuals, None)?;
                let monotone = residuals.windows(2).all(|w| w[1].abs() <= w[0].abs());
                let alt = fit_rate(RateModel::Eps, &eps, &residuals, None)?;
                let best_model = if alt.r_squared > fit.r_squared { RateModel::Eps } else { fit.model };
                fits.push(SeriesFit { dim, p, r, fit, monotone, best_model });
            }
        }
    }
    Ok(VaradhanReport { table, fits })
}

#[derive(Debug, Clone)]
pub struct PsiReport {
    pub table: Table,
    /// `ε log ψ(ε)` shrinks toward zero along the sequence
    pub converges: bool,
}

/// `(ε, ψ, ε log ψ, ε log|log ψ|)` along the sequence.
pub fn run_psi_rate_table(modulus: &ModulusOfContinuity, eps: &[f64]) -> Result<PsiReport> {
    let mut table = Table::new(&["eps", "psi", "eps_log_psi", "eps_loglog_psi"]);
    let mut scaled = Vec::with_capacity(eps.len());
    for &e in eps {
        let psi = psi_of_eps(modulus, e)?;
        let l = psi.ln();
        table.push(vec![e.into(), psi.into(), (e * l).into(), (e * l.abs().ln()).into()])?;
        scaled.push((e * l).abs());
    }
    let converges =
        scaled.len() >= 2 && scaled.windows(2).all(|w| w[1] < w[0]) && *scaled.last().unwrap() <= 0.5 * scaled[0];
    Ok(PsiReport { table, converges })
}

/// `(r S(ε/r) - S(ε))/(r - 1)` between consecutive rows of one series.
fn richardson(rows: &[QMeanRow]) -> Vec<f64> {
    let mut out = vec![f64::NAN; rows.len()];
    for k in 1..rows.len() {
        let r = rows[k - 1].eps / rows[k].eps;
        out[k] = (r * rows[k].scaled - rows[k - 1].scaled) / (r - 1.0);
    }
    out
}

/// Scaled q-means with predictions and a Richardson column, for every
/// `(N, p, q)` of the config.
pub fn run_qmean_sweep(cfg: &SweepConfig) -> Result<Table> {
    let eps = cfg.eps.values();
    let mut table = Table::new(&[
        "N",
        "p",
        "q",
        "eps",
        "xi",
        "mu",
        "scaled",
        "prediction",
        "ratio",
        "richardson",
        "residual",
        "path",
        "ill_conditioned",
    ]);
    let dims: Vec<usize> = match &cfg.geometry {
        GeometryConfig::Ellipsoid { semi_axes, .. } => vec![semi_axes.len()],
        _ => cfg.dims.clone(),
    };
    let barriers = match cfg.geometry {
        GeometryConfig::Ellipsoid { r_i, r_e, .. } => Some(BarrierSetup { r_i, r_e, monte_carlo: cfg.monte_carlo() }),
        _ => None,
    };
    for dim in dims {
        let (domain, touch) = cfg.geometry.build(dim)?;
        for &p in &cfg.p_values {
            for &q in &cfg.q_values {
                let rows = qmean_limit_experiment(&domain, &touch, p, q, &eps, barriers)?;
                let mut paths: Vec<String> = rows.iter().map(|r| r.path.clone()).collect();
                paths.sort();
                paths.dedup();
                for path in paths {
                    let series: Vec<QMeanRow> = rows.iter().filter(|r| r.path == path).cloned().collect();
                    let rich = richardson(&series);
                    for (row, rich) in series.iter().zip(rich) {
                        table.push(vec![
                            dim.into(),
                            p.into(),
                            q.into(),
                            row.eps.into(),
                            row.xi.into(),
                            row.mu.into(),
                            row.scaled.into(),
                            row.prediction.into(),
                            row.ratio.into(),
                            rich.into(),
                            row.residual.into(),
                            row.path.clone().into(),
                            row.ill_conditioned.into(),
                        ])?;
                    }
                }
            }
        }
    }
    Ok(table)
}
