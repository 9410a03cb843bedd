//! Declarative experiment harness: ε-sweeps of the coupled strong error,
//! W₁ distances between marginals, slow-fast sweeps, Schauder λ-sweeps and
//! mollifier slope checks, with CSV tables and a hashed run manifest.
//!
//! Every experiment reduces per-path results in path order, so the tables
//! are byte-identical for any worker count.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::averaging::{self, RateReport, RateSpec};
use crate::besov::{self, Mollifier};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::io::CsvTable;
use crate::pde::{self, Forcing, NonlocalPdeSpec};
use crate::sde::{
    self, AveragedSdeSpec, CoefficientSpec, FastDrift, Field, MultiscaleSdeSpec, SlowFastSpec,
    TimeStructure,
};
use crate::spectral::{GridFunction, PeriodicGrid};
use crate::stable_noise::{sample_increments, StableParams, StablePathIncrements, TimeGrid};
use crate::stats::{self, LinearFit};

pub const MIN_PATHS: usize = 100;
pub const MIN_BATCHES: usize = 10;
pub const MIN_FIT_POINTS: usize = 4;
pub const THREADS_ENV: &str = "LEVY_AVG_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    StrongRate,
    WeakW1,
    SlowFast,
    SchauderSweep,
    MollifierCheck,
    Ex1Exact,
}

impl ExperimentKind {
    fn uses_paths(self) -> bool {
        matches!(
            self,
            Self::StrongRate | Self::WeakW1 | Self::SlowFast | Self::Ex1Exact
        )
    }
}

/// Time grid for path experiments. With `dt` every ε shares one grid;
/// otherwise `dt = ε / steps_per_epsilon` and the ladder ratios must be
/// integers so coarser grids reuse the finest noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "one")]
    pub t_end: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "twenty")]
    pub steps_per_epsilon: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            dt: None,
            steps_per_epsilon: 20.0,
        }
    }
}

/// Coefficients of the system under study. Each experiment kind reads the
/// keys it needs and reports missing ones as config errors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub alpha: Option<f64>,
    #[serde(default)]
    pub x0: Vec<f64>,
    #[serde(default)]
    pub drift: Vec<String>,
    #[serde(default)]
    pub diffusion: Vec<String>,
    #[serde(default)]
    pub averaged_drift: Vec<String>,
    #[serde(default)]
    pub averaged_diffusion: Vec<String>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub iota: Option<f64>,
    pub period: Option<f64>,
    #[serde(default)]
    pub frequencies: Vec<f64>,
    pub time_factor: Option<String>,
    pub rough_profile: Option<String>,
    pub mollify_n: Option<f64>,
    pub profile_points: Option<usize>,
    #[serde(default)]
    pub w1_times: Vec<f64>,
    #[serde(default)]
    pub f: Vec<String>,
    pub fast_rate: Option<f64>,
    #[serde(default)]
    pub fast_drift: Vec<String>,
    #[serde(default)]
    pub y0: Vec<f64>,
    #[serde(default)]
    pub averaged_f: Vec<String>,
    pub kappa: Option<f64>,
    pub gauss_order: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchauderConfig {
    pub alpha: f64,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default)]
    pub theta: f64,
    pub etas: Vec<f64>,
    pub lambdas: Vec<f64>,
    #[serde(default = "default_pde_points")]
    pub grid_points: usize,
    #[serde(default = "default_forcing")]
    pub forcing: String,
    #[serde(default = "one")]
    pub horizon: f64,
    #[serde(default = "default_pde_dt")]
    pub dt: f64,
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MollifierConfig {
    #[serde(default = "default_test_function")]
    pub function: String,
    #[serde(default = "default_mollifier_points")]
    pub grid_points: usize,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// Besov smoothness of `function`; caps `κ` at `smoothness − δ`.
    pub smoothness: Option<f64>,
    pub deltas: Vec<f64>,
    pub n_list: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub n_paths: usize,
    #[serde(default = "one")]
    pub p: f64,
    #[serde(default)]
    pub epsilon_list: Vec<f64>,
    #[serde(default)]
    pub strict: bool,
    #[serde(default = "default_batches")]
    pub batches: usize,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub system: SystemConfig,
    pub schauder: Option<SchauderConfig>,
    pub mollifier: Option<MollifierConfig>,
}

fn one() -> f64 {
    1.0
}
fn twenty() -> f64 {
    20.0
}
fn default_batches() -> usize {
    MIN_BATCHES
}
fn default_pde_points() -> usize {
    256
}
fn default_pde_dt() -> f64 {
    1e-3
}
fn default_snapshots() -> usize {
    50
}
fn default_forcing() -> String {
    LACUNARY_FORCING.to_string()
}
fn default_test_function() -> String {
    "abs(x - pi)".to_string()
}
fn default_mollifier_points() -> usize {
    1024
}
fn default_kappa() -> f64 {
    0.3
}

/// One cosine per dyadic block: every block of `B⁰_{∞,∞}` carries the same
/// weight.
pub const LACUNARY_FORCING: &str = "cos(x) + cos(2*x) + cos(4*x) + cos(8*x) + cos(16*x) + cos(32*x)";

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn need<T: Copy>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| cfg_err(format!("missing system.{key}")))
}

fn parse_fields(sources: &[String]) -> Result<Vec<Field>> {
    sources.iter().map(|s| Field::parse(s)).collect()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Built-in oscillating-drift example: `b = cos(t/ε)`, `b̄ = 0`, `σ = 1`.
    pub fn ex1(alpha: f64, ladder_len: usize, n_paths: usize) -> Self {
        Self {
            kind: ExperimentKind::Ex1Exact,
            master_seed: 1,
            n_paths,
            p: 1.0,
            epsilon_list: (0..ladder_len).map(|k| 2f64.powi(-4 - k as i32)).collect(),
            strict: true,
            batches: MIN_BATCHES,
            grid: GridConfig::default(),
            system: SystemConfig {
                alpha: Some(alpha),
                x0: vec![0.0],
                drift: vec!["cos(t)".into()],
                diffusion: vec!["1".into()],
                averaged_drift: vec!["0".into()],
                beta: Some(0.99),
                period: Some(std::f64::consts::TAU),
                ..SystemConfig::default()
            },
            schauder: None,
            mollifier: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind.uses_paths() {
            let eps = &self.epsilon_list;
            if eps.is_empty() {
                return Err(cfg_err("epsilon_list is empty"));
            }
            if eps.len() < MIN_FIT_POINTS {
                return Err(cfg_err(format!(
                    "epsilon_list needs at least {MIN_FIT_POINTS} entries for a slope fit, got {}",
                    eps.len()
                )));
            }
            if eps.windows(2).any(|w| !(w[1] < w[0])) {
                return Err(cfg_err("epsilon_list must be strictly decreasing"));
            }
            if eps.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
                return Err(cfg_err("epsilon values must lie in (0, 1]"));
            }
            if self.n_paths < MIN_PATHS {
                return Err(cfg_err(format!("n_paths must be at least {MIN_PATHS}, got {}", self.n_paths)));
            }
            if self.batches < MIN_BATCHES || self.batches > self.n_paths {
                return Err(cfg_err(format!(
                    "batches must lie in [{MIN_BATCHES}, n_paths], got {}",
                    self.batches
                )));
            }
            if !(self.grid.t_end > 0.0) {
                return Err(cfg_err("grid.t_end must be positive"));
            }
            if let Some(dt) = self.grid.dt {
                if !(dt > 0.0 && dt <= self.grid.t_end) {
                    return Err(cfg_err("grid.dt must lie in (0, t_end]"));
                }
            } else if !(self.grid.steps_per_epsilon >= 1.0) {
                return Err(cfg_err("grid.steps_per_epsilon must be at least 1"));
            }
            let alpha = need(self.system.alpha, "alpha")?;
            if !(alpha > 0.0 && alpha < 2.0) {
                return Err(cfg_err(format!("system.alpha must lie in (0, 2), got {alpha}")));
            }
            if !(self.p >= 1.0) {
                return Err(cfg_err("p must be at least 1"));
            }
            let sigma_constant = parse_fields(&self.system.diffusion)?.iter().all(Field::is_constant);
            if !sigma_constant && self.p >= alpha {
                return Err(cfg_err(format!(
                    "p = {} must be below alpha = {alpha} when the diffusion is not constant",
                    self.p
                )));
            }
        }
        match self.kind {
            ExperimentKind::SchauderSweep => {
                let s = self.schauder.as_ref().ok_or_else(|| cfg_err("missing [schauder] table"))?;
                if s.lambdas.is_empty() {
                    return Err(cfg_err("schauder.lambdas is empty"));
                }
                if s.etas.is_empty() {
                    return Err(cfg_err("schauder.etas is empty"));
                }
                if s.lambdas.iter().any(|&l| !(l >= 0.0)) {
                    return Err(cfg_err("schauder.lambdas must be nonnegative"));
                }
            }
            ExperimentKind::MollifierCheck => {
                let m = self.mollifier.as_ref().ok_or_else(|| cfg_err("missing [mollifier] table"))?;
                if m.n_list.is_empty() {
                    return Err(cfg_err("mollifier.n_list is empty"));
                }
                if m.deltas.is_empty() {
                    return Err(cfg_err("mollifier.deltas is empty"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn alpha(&self) -> Result<f64> {
        need(self.system.alpha, "alpha")
    }

    fn x0(&self, d: usize) -> Result<Vec<f64>> {
        match self.system.x0.len() {
            0 => Ok(vec![0.0; d]),
            n if n == d => Ok(self.system.x0.clone()),
            n => Err(cfg_err(format!("system.x0 has {n} entries, expected {d}"))),
        }
    }

    fn time_structure(&self, fields: &[Field]) -> TimeStructure {
        if let Some(p) = self.system.period {
            TimeStructure::Periodic(p)
        } else if !self.system.frequencies.is_empty() {
            TimeStructure::AlmostPeriodic(self.system.frequencies.clone())
        } else if fields.iter().any(Field::depends_on_time) {
            TimeStructure::Tabulated
        } else {
            TimeStructure::Autonomous
        }
    }

    fn diffusion_fields(&self) -> Result<Vec<Field>> {
        if self.system.diffusion.is_empty() {
            Ok(vec![Field::constant(1.0)])
        } else {
            parse_fields(&self.system.diffusion)
        }
    }

    fn averaged_diffusion_fields(&self) -> Result<Vec<Field>> {
        if self.system.averaged_diffusion.is_empty() {
            let sigma = self.diffusion_fields()?;
            if sigma.iter().any(Field::depends_on_time) {
                return Err(cfg_err("time-dependent diffusion needs system.averaged_diffusion"));
            }
            Ok(sigma)
        } else {
            parse_fields(&self.system.averaged_diffusion)
        }
    }

    fn beta(&self) -> f64 {
        self.system.beta.unwrap_or(0.99)
    }

    /// Fine grid shared by the whole ladder plus the coarsening factor per ε.
    fn ladder_grids(&self) -> Result<(TimeGrid, Vec<usize>)> {
        let t_end = self.grid.t_end;
        if let Some(dt) = self.grid.dt {
            let n = (t_end / dt - 1e-9).ceil() as usize;
            return Ok((TimeGrid::new(0.0, t_end, n)?, vec![1; self.epsilon_list.len()]));
        }
        let eps_min = *self.epsilon_list.last().unwrap();
        let n_fine = (t_end * self.grid.steps_per_epsilon / eps_min).round() as usize;
        let mut factors = Vec::with_capacity(self.epsilon_list.len());
        for &e in &self.epsilon_list {
            let r = e / eps_min;
            let f = r.round();
            if (r - f).abs() > 1e-9 * r || n_fine % (f as usize) != 0 {
                return Err(cfg_err(format!(
                    "epsilon ratio {r} is not an integer dividing {n_fine} fine steps"
                )));
            }
            factors.push(f as usize);
        }
        Ok((TimeGrid::new(0.0, t_end, n_fine)?, factors))
    }
}

/// A CSV table plus the configuration echo it was produced under.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub name: String,
    pub table: CsvTable,
    pub metadata: BTreeMap<String, String>,
}

impl ResultTable {
    fn new(name: &str, table: CsvTable, cfg: &ExperimentConfig) -> Self {
        let mut metadata = BTreeMap::new();
        metadata.insert("kind".into(), format!("{:?}", cfg.kind));
        metadata.insert("master_seed".into(), cfg.master_seed.to_string());
        metadata.insert("config_sha256".into(), sha256_hex(cfg.to_toml().as_bytes()));
        Self {
            name: name.into(),
            table,
            metadata,
        }
    }

    pub fn csv(&self) -> String {
        self.table.render()
    }

    pub fn content_hash(&self) -> String {
        sha256_hex(self.csv().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateEstimate {
    /// `"epsilon"` or `"ell1"`: the quantity the error is regressed on.
    pub abscissa: String,
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
    pub n_points: usize,
    pub theoretical_exponent: Option<f64>,
}

impl RateEstimate {
    fn from_fit(abscissa: &str, fit: LinearFit, n_points: usize, theory: Option<f64>) -> Self {
        Self {
            abscissa: abscissa.into(),
            slope: fit.slope,
            slope_stderr: fit.slope_stderr,
            intercept: fit.intercept,
            r_squared: fit.r_squared,
            residuals: fit.residuals,
            n_points,
            theoretical_exponent: theory,
        }
    }

    fn fit(abscissa: &str, x: &[f64], y: &[f64], theory: Option<f64>) -> Result<Option<Self>> {
        if x.len() < MIN_FIT_POINTS {
            return Err(cfg_err(format!("a slope fit needs at least {MIN_FIT_POINTS} points")));
        }
        if y.iter().any(|&v| v <= 0.0) {
            return Ok(None);
        }
        let fit = stats::log_log_fit(x, y)?;
        Ok(Some(Self::from_fit(abscissa, fit, x.len(), theory)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct W1Estimate {
    pub epsilon: f64,
    pub t: f64,
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

/// Per-ε summary of a coupled sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub dt: f64,
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: usize,
    /// Empirical W₁ between the terminal marginals of the first component.
    pub w1_final: f64,
    /// Mean terminal gap of the first component; a coupling bound on `w1_final`.
    pub mean_abs_final: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    /// Absent when some mean error is zero, as for a vanishing drift gap.
    pub rate: Option<RateEstimate>,
    pub theory: Option<RateReport>,
    pub slow_fast_theory: Option<averaging::SlowFastRate>,
    pub warnings: Vec<String>,
    pub table: ResultTable,
}

#[derive(Debug, Clone)]
pub struct WeakOutput {
    pub estimates: Vec<W1Estimate>,
    /// `W₁` is nonincreasing in ε at every checkpoint up to two combined
    /// standard errors.
    pub monotone: bool,
    pub table: ResultTable,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchauderFit {
    pub eta: f64,
    /// Raw-norm slope against `1 + λ`.
    pub slope: f64,
    pub target: f64,
    /// Largest over smallest scaled ratio across λ.
    pub spread: f64,
}

#[derive(Debug, Clone)]
pub struct SchauderOutput {
    pub fits: Vec<SchauderFit>,
    pub table: ResultTable,
}

#[derive(Debug, Clone)]
pub struct MollifierOutput {
    pub reports: Vec<besov::MollifierSlopeReport>,
    pub table: ResultTable,
}

#[derive(Debug, Clone)]
pub enum ExperimentOutput {
    Sweep(SweepOutput),
    Weak(WeakOutput),
    Schauder(SchauderOutput),
    Mollifier(MollifierOutput),
}

impl ExperimentOutput {
    pub fn tables(&self) -> Vec<&ResultTable> {
        match self {
            Self::Sweep(o) => vec![&o.table],
            Self::Weak(o) => vec![&o.table],
            Self::Schauder(o) => vec![&o.table],
            Self::Mollifier(o) => vec![&o.table],
        }
    }

    /// Human-readable result lines.
    pub fn summary(&self) -> Vec<String> {
        match self {
            Self::Sweep(o) => {
                let mut v: Vec<String> = o
                    .rows
                    .iter()
                    .map(|r| format!("eps={:.6e} error={:.6e} ± {:.2e} (M={})", r.epsilon, r.mean, r.stderr, r.n_paths))
                    .collect();
                v.push(match &o.rate {
                    Some(r) => format!(
                        "slope vs {} = {:.4} ± {:.4} (r²={:.4}){}",
                        r.abscissa,
                        r.slope,
                        r.slope_stderr,
                        r.r_squared,
                        r.theoretical_exponent
                            .map_or(String::new(), |e| format!(", theoretical exponent {e:.4}"))
                    ),
                    None => "no slope fit: some mean errors are zero".into(),
                });
                v.extend(o.warnings.iter().cloned());
                v
            }
            Self::Weak(o) => {
                let mut v: Vec<String> = o
                    .estimates
                    .iter()
                    .map(|w| format!("eps={:.6e} t={} W1={:.6e} ± {:.2e}", w.epsilon, w.t, w.value, w.stderr))
                    .collect();
                v.push(format!("monotone in epsilon: {}", o.monotone));
                v.push("checked at the configured initial condition only".into());
                v
            }
            Self::Schauder(o) => o
                .fits
                .iter()
                .map(|f| format!("eta={} slope={:.4} target={:.4} spread={:.3}", f.eta, f.slope, f.target, f.spread))
                .collect(),
            Self::Mollifier(o) => o
                .reports
                .iter()
                .map(|r| {
                    format!(
                        "delta={} kappa={} growth_slope={:.4} decay_slope={:.4}",
                        r.delta, r.kappa, r.growth_slope, r.decay_slope
                    )
                })
                .collect(),
        }
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    Ok(match cfg.kind {
        ExperimentKind::StrongRate | ExperimentKind::Ex1Exact => ExperimentOutput::Sweep(run_strong_rate(cfg)?),
        ExperimentKind::SlowFast => ExperimentOutput::Sweep(run_slow_fast(cfg)?),
        ExperimentKind::WeakW1 => ExperimentOutput::Weak(run_weak_w1(cfg)?),
        ExperimentKind::SchauderSweep => ExperimentOutput::Schauder(run_schauder_sweep(cfg)?),
        ExperimentKind::MollifierCheck => ExperimentOutput::Mollifier(run_mollifier_check(cfg)?),
    })
}

/// Runs on a dedicated pool of `threads` workers; `None` uses the global pool.
pub fn run_with_threads(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentOutput> {
    match threads {
        None => run(cfg),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| cfg_err(format!("cannot build worker pool: {e}")))?
            .install(|| run(cfg)),
    }
}

/// Seed of an auxiliary stream, never equal to the master seed.
pub fn derived_seed(master: u64, stream: u64) -> u64 {
    master ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stream.wrapping_add(1))
}

fn noise_for(fine: &StablePathIncrements, factor: usize) -> Result<StablePathIncrements> {
    if factor == 1 {
        Ok(fine.clone())
    } else {
        fine.coarsen(factor)
    }
}

/// Per-path result of one ε level.
#[derive(Clone, Copy)]
struct PathSample {
    error: f64,
    a_final: f64,
    b_final: f64,
}

fn summarize(
    cfg: &ExperimentConfig,
    per_path: &[Vec<PathSample>],
    fine: TimeGrid,
    factors: &[usize],
) -> Result<Vec<SweepRow>> {
    cfg.epsilon_list
        .iter()
        .zip(factors)
        .enumerate()
        .map(|(j, (&epsilon, &factor))| {
            let errors: Vec<f64> = per_path.iter().map(|p| p[j].error).collect();
            let a: Vec<f64> = per_path.iter().map(|p| p[j].a_final).collect();
            let b: Vec<f64> = per_path.iter().map(|p| p[j].b_final).collect();
            let gaps: Vec<f64> = a.iter().zip(&b).map(|(u, v)| (u - v).abs()).collect();
            Ok(SweepRow {
                epsilon,
                dt: fine.dt() * factor as f64,
                mean: stats::mean(&errors),
                stderr: stats::batch_stderr(&errors, cfg.batches)?,
                n_paths: errors.len(),
                w1_final: stats::wasserstein1(&a, &b)?,
                mean_abs_final: stats::mean(&gaps),
            })
        })
        .collect()
}

fn sweep_table(name: &str, cfg: &ExperimentConfig, rows: &[SweepRow]) -> ResultTable {
    let mut t = CsvTable::new(
        format!("{name}/v1"),
        &["epsilon", "dt", "mean_sup_error_p", "stderr", "n_paths", "w1_final", "mean_abs_final"],
    );
    for r in rows {
        t.push(&[r.epsilon, r.dt, r.mean, r.stderr, r.n_paths as f64, r.w1_final, r.mean_abs_final]);
    }
    ResultTable::new(name, t, cfg)
}

fn collect_warnings<'a>(paths: impl Iterator<Item = Option<&'a str>>) -> Vec<String> {
    let mut w: Vec<String> = paths.flatten().map(str::to_string).collect();
    w.sort();
    w.dedup();
    w
}

/// Coupled `X^ε` / `X̄` sweep: the ensemble mean of `sup_t |X^ε − X̄|^p`
/// per ε, regressed on ε (periodic or autonomous drift) or on `ℓ₁(T/ε)`.
pub fn run_strong_rate(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    let alpha = cfg.alpha()?;
    let drift = parse_fields(&cfg.system.drift)?;
    if drift.is_empty() {
        return Err(cfg_err("missing system.drift"));
    }
    let d = drift.len();
    let sigma = cfg.diffusion_fields()?;
    let ts = cfg.time_structure(&drift);
    let beta = cfg.beta();
    let coeffs = CoefficientSpec::new(drift, sigma, beta, ts.clone())?;
    let bar_drift = if cfg.system.averaged_drift.is_empty() {
        return Err(cfg_err("missing system.averaged_drift"));
    } else {
        parse_fields(&cfg.system.averaged_drift)?
    };
    let x0 = cfg.x0(d)?;
    let bar = CoefficientSpec::new(bar_drift.clone(), cfg.averaged_diffusion_fields()?, beta, TimeStructure::Autonomous)?;
    let gamma = cfg.system.gamma.unwrap_or(beta);
    let iota = cfg.system.iota.unwrap_or(averaging::DEFAULT_IOTA);
    let theory = averaging::theoretical_rate(&RateSpec::new(alpha, beta, gamma, iota, cfg.p)?)?;

    let probe: Vec<Vec<f64>> = vec![x0.clone(), x0.iter().map(|v| v + 0.5).collect()];
    let check = averaging::average_drift(&coeffs, 50.0, &probe, Some(&bar_drift))?;
    if check.remainder.is_some_and(|r| r > 1e-3) {
        return Err(cfg_err(format!(
            "system.averaged_drift differs from the time average of system.drift by {:.3e}",
            check.remainder.unwrap()
        )));
    }

    let avg = AveragedSdeSpec::new(bar, alpha, x0.clone())?;
    let (fine, factors) = cfg.ladder_grids()?;
    let params = StableParams::standard(alpha)?;
    let systems: Vec<MultiscaleSdeSpec> = cfg
        .epsilon_list
        .iter()
        .map(|&e| Ok(MultiscaleSdeSpec::new(coeffs.clone(), alpha, e, x0.clone())?.strict(cfg.strict)))
        .collect::<Result<_>>()?;

    let results: Vec<(Vec<PathSample>, Vec<Option<String>>)> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let fine_noise = sample_increments(params, fine, d, cfg.master_seed, i)?;
            let mut samples = Vec::with_capacity(systems.len());
            let mut warns = Vec::new();
            for (ms, &factor) in systems.iter().zip(&factors) {
                let noise = noise_for(&fine_noise, factor)?;
                let (a, b) = sde::simulate_coupled(ms, &avg, &noise)?;
                warns.push(a.warning().map(str::to_string));
                samples.push(PathSample {
                    error: sde::sup_error(&a, &b, cfg.p)?,
                    a_final: a.final_state()[0],
                    b_final: b.final_state()[0],
                });
            }
            Ok((samples, warns))
        })
        .collect::<Result<_>>()?;
    let warnings = collect_warnings(results.iter().flat_map(|(_, w)| w.iter().map(Option::as_deref)));
    let per_path: Vec<Vec<PathSample>> = results.into_iter().map(|(s, _)| s).collect();
    let rows = summarize(cfg, &per_path, fine, &factors)?;

    let errors: Vec<f64> = rows.iter().map(|r| r.mean).collect();
    let (abscissa, x) = match ts {
        TimeStructure::Periodic(_) | TimeStructure::Autonomous => ("epsilon", cfg.epsilon_list.clone()),
        _ => {
            let grid = PeriodicGrid::new(d.min(2), std::f64::consts::TAU, 32)?;
            if d > 2 {
                ("epsilon", cfg.epsilon_list.clone())
            } else {
                let ell: Vec<f64> = cfg
                    .epsilon_list
                    .iter()
                    .map(|e| averaging::ell1(&coeffs, &bar_drift, cfg.grid.t_end / e, gamma.min(0.99), grid))
                    .collect::<Result<_>>()?;
                ("ell1", ell)
            }
        }
    };
    let rate = RateEstimate::fit(abscissa, &x, &errors, Some(theory.exponent))?;
    let name = if cfg.kind == ExperimentKind::Ex1Exact { "ex1" } else { "strong_rate" };
    Ok(SweepOutput {
        table: sweep_table(name, cfg, &rows),
        rows,
        rate,
        theory: Some(theory),
        slow_fast_theory: None,
        warnings,
    })
}

/// Slow-fast sweep: coupled `X^ε` and `X̄` share the stable noise, the fast
/// Brownian motion is independent, and `f̄` comes from the Gaussian
/// invariant law when the fast drift is linear.
pub fn run_slow_fast(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    let alpha = cfg.alpha()?;
    let s = &cfg.system;
    if s.f.is_empty() {
        return Err(cfg_err("missing system.f"));
    }
    let n = s.f.len();
    let f = parse_fields(&s.f)?;
    let (fast_drift, m) = match (s.fast_rate, s.fast_drift.is_empty()) {
        (Some(a), true) => (FastDrift::Linear(a), s.y0.len().max(1)),
        (None, false) => {
            let exprs = s.fast_drift.iter().map(|e| Expr::parse(e)).collect::<Result<Vec<_>>>()?;
            let m = exprs.len();
            (FastDrift::General(exprs), m)
        }
        _ => return Err(cfg_err("give exactly one of system.fast_rate and system.fast_drift")),
    };
    let y0 = if s.y0.is_empty() { vec![0.0; m] } else { s.y0.clone() };
    let f_bar: Vec<Field> = if !s.averaged_f.is_empty() {
        parse_fields(&s.averaged_f)?
    } else if let FastDrift::Linear(a) = fast_drift {
        s.f.iter()
            .map(|src| averaging::gaussian_fast_average(&Expr::parse(src)?, a, m, s.gauss_order.unwrap_or(40)))
            .collect::<Result<_>>()?
    } else {
        return Err(cfg_err("a nonlinear fast drift needs system.averaged_f"));
    };
    let sigma = cfg.diffusion_fields()?;
    let x0 = cfg.x0(n)?;
    let beta = cfg.beta();
    let bar = CoefficientSpec::new(f_bar, sigma.clone(), beta, TimeStructure::Autonomous)?;
    let avg = AveragedSdeSpec::new(bar, alpha, x0.clone())?;
    let kappa = s.kappa.unwrap_or(0.05);
    let iota = s.iota.unwrap_or(averaging::DEFAULT_IOTA);
    let theory = averaging::slow_fast_rate(alpha, beta, kappa, iota)?;

    let specs: Vec<SlowFastSpec> = cfg
        .epsilon_list
        .iter()
        .map(|&e| SlowFastSpec::new(f.clone(), fast_drift.clone(), e, alpha, x0.clone(), y0.clone(), sigma.clone()))
        .collect::<Result<_>>()?;
    let (fine, factors) = cfg.ladder_grids()?;
    let params = StableParams::standard(alpha)?;
    let seed_w = derived_seed(cfg.master_seed, 1);
    let per_path: Vec<Vec<PathSample>> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let fine_noise = sample_increments(params, fine, n, cfg.master_seed, i)?;
            specs
                .iter()
                .zip(&factors)
                .map(|(spec, &factor)| {
                    let noise = noise_for(&fine_noise, factor)?;
                    let (x, _) = sde::simulate_slow_fast(spec, &noise, seed_w)?;
                    let xbar = sde::euler_maruyama(&avg, &noise)?;
                    Ok(PathSample {
                        error: sde::sup_error(&x, &xbar, cfg.p)?,
                        a_final: x.final_state()[0],
                        b_final: xbar.final_state()[0],
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let rows = summarize(cfg, &per_path, fine, &factors)?;
    let errors: Vec<f64> = rows.iter().map(|r| r.mean).collect();
    let rate = RateEstimate::fit("epsilon", &cfg.epsilon_list, &errors, Some(theory.rate))?;
    Ok(SweepOutput {
        table: sweep_table("slow_fast", cfg, &rows),
        rows,
        rate,
        theory: None,
        slow_fast_theory: Some(theory),
        warnings: Vec::new(),
    })
}

/// Drift `a(t)·(h * ρ_n)(x)` on the circle: `h` is sampled on
/// `profile_points` points over `[0, 2π)` and mollified at level `n`.
fn mollified_drift(cfg: &ExperimentConfig) -> Result<(Field, Field)> {
    let s = &cfg.system;
    let profile = Expr::parse(
        s.rough_profile
            .as_deref()
            .ok_or_else(|| cfg_err("missing system.rough_profile"))?,
    )?;
    let factor = Expr::parse(s.time_factor.as_deref().unwrap_or("1 + cos(t)"))?;
    let period = s.period.unwrap_or(std::f64::consts::TAU);
    let grid = PeriodicGrid::new(1, std::f64::consts::TAU, s.profile_points.unwrap_or(512))?;
    let h = GridFunction::from_fn(grid, |x| profile.eval_tx(0.0, &[x[0]]));
    let hn = besov::mollify(&h, &Mollifier::new(need(s.mollify_n, "mollify_n")?)?);
    let mean_factor = averaging::integrate(|t| factor.eval_tx(t, &[]), 0.0, period, 1e-12) / period;
    let samples = hn.into_values();
    Ok((
        Field::SpatialTable {
            period: std::f64::consts::TAU,
            samples: samples.clone(),
            temporal: factor,
        },
        Field::SpatialTable {
            period: std::f64::consts::TAU,
            samples,
            temporal: Expr::constant(mean_factor),
        },
    ))
}

/// Independent ensembles of `X^ε` (common across ε) and `X̄`, compared by
/// the W₁ distance of their one-dimensional marginals.
pub fn run_weak_w1(cfg: &ExperimentConfig) -> Result<WeakOutput> {
    let alpha = cfg.alpha()?;
    let d = cfg.system.x0.len().max(1);
    if d != 1 {
        return Err(Error::Unsupported("W1 is computed for one-dimensional systems only".into()));
    }
    let beta = cfg.system.beta.unwrap_or(1.0 - alpha / 2.0);
    if !averaging::in_a2(alpha, beta) && !averaging::in_a1(alpha, beta) {
        return Err(Error::Region {
            alpha,
            beta,
            region: "A1 ∪ A2",
        });
    }
    let (b, b_bar) = mollified_drift(cfg)?;
    let sigma = cfg.diffusion_fields()?;
    let period = cfg.system.period.unwrap_or(std::f64::consts::TAU);
    let coeffs = CoefficientSpec::new(vec![b], sigma.clone(), beta, TimeStructure::Periodic(period))?;
    let bar = CoefficientSpec::new(vec![b_bar], cfg.averaged_diffusion_fields()?, beta, TimeStructure::Autonomous)?;
    let x0 = cfg.x0(1)?;
    let avg = AveragedSdeSpec::new(bar, alpha, x0.clone())?;
    let (fine, factors) = cfg.ladder_grids()?;
    let times = if cfg.system.w1_times.is_empty() {
        vec![cfg.grid.t_end]
    } else {
        cfg.system.w1_times.clone()
    };
    let index = |grid: TimeGrid, t: f64| {
        grid.index_of(t, 1e-9)
            .ok_or_else(|| cfg_err(format!("checkpoint t = {t} is not on the time grid")))
    };
    let params = StableParams::standard(alpha)?;
    let systems: Vec<MultiscaleSdeSpec> = cfg
        .epsilon_list
        .iter()
        .map(|&e| Ok(MultiscaleSdeSpec::new(coeffs.clone(), alpha, e, x0.clone())?.strict(cfg.strict)))
        .collect::<Result<_>>()?;
    let seed_bar = derived_seed(cfg.master_seed, 2);

    // per path: marginals[ε][checkpoint]
    let eps_marginals: Vec<Vec<Vec<f64>>> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let fine_noise = sample_increments(params, fine, 1, cfg.master_seed, i)?;
            systems
                .iter()
                .zip(&factors)
                .map(|(ms, &factor)| {
                    let noise = noise_for(&fine_noise, factor)?;
                    let path = sde::euler_maruyama(ms, &noise)?;
                    times.iter().map(|&t| Ok(path.state(index(noise.grid(), t)?)[0])).collect()
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let bar_marginals: Vec<Vec<f64>> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let noise = sample_increments(params, fine, 1, seed_bar, i)?;
            let path = sde::euler_maruyama(&avg, &noise)?;
            times.iter().map(|&t| Ok(path.state(index(fine, t)?)[0])).collect()
        })
        .collect::<Result<_>>()?;

    let mut estimates = Vec::new();
    let mut table = CsvTable::new("weak_w1/v1", &["epsilon", "t", "w1", "stderr", "n_per_side"]);
    for (j, &epsilon) in cfg.epsilon_list.iter().enumerate() {
        for (c, &t) in times.iter().enumerate() {
            let a: Vec<f64> = eps_marginals.iter().map(|p| p[j][c]).collect();
            let b: Vec<f64> = bar_marginals.iter().map(|p| p[c]).collect();
            let value = stats::wasserstein1(&a, &b)?;
            let batch: Vec<f64> = stats::batch_bounds(a.len(), cfg.batches)
                .into_iter()
                .map(|(lo, hi)| stats::wasserstein1(&a[lo..hi], &b[lo..hi]))
                .collect::<Result<_>>()?;
            let bm = stats::mean(&batch);
            let var = batch.iter().map(|v| (v - bm).powi(2)).sum::<f64>() / (batch.len() - 1) as f64;
            let stderr = (var / batch.len() as f64).sqrt();
            table.push(&[epsilon, t, value, stderr, a.len() as f64]);
            estimates.push(W1Estimate {
                epsilon,
                t,
                value,
                stderr,
                n_samples: a.len(),
            });
        }
    }
    let k = times.len();
    let monotone = (0..k).all(|c| {
        estimates[c..].iter().step_by(k).collect::<Vec<_>>().windows(2).all(|w| {
            w[1].value <= w[0].value + 2.0 * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt()
        })
    });
    Ok(WeakOutput {
        estimates,
        monotone,
        table: ResultTable::new("weak_w1", table, cfg),
    })
}

/// Forward solves of the nonlocal equation over a λ ladder with `g = 0`.
pub fn run_schauder_sweep(cfg: &ExperimentConfig) -> Result<SchauderOutput> {
    let s = cfg.schauder.as_ref().ok_or_else(|| cfg_err("missing [schauder] table"))?;
    let grid = PeriodicGrid::circle(s.grid_points)?;
    let forcing = Expr::parse(&s.forcing)?;
    let f = GridFunction::from_fn(grid, |x| forcing.eval_tx(0.0, &[x[0]]));
    let solutions: Vec<pde::PdeSolution> = s
        .lambdas
        .par_iter()
        .map(|&lambda| {
            let spec = NonlocalPdeSpec::new(s.alpha, s.c, lambda, Forcing::Constant(f.clone()), s.horizon, s.dt);
            let stride = (spec.n_steps() / s.snapshots.max(1)).max(1);
            pde::solve_forward(&spec.with_snapshot_stride(stride))
        })
        .collect::<Result<_>>()?;
    let mut table = CsvTable::new("schauder_sweep/v1", &["lambda", "eta", "theta", "ratio", "raw_norm"]);
    let mut fits = Vec::new();
    for &eta in &s.etas {
        let exponent = (s.alpha - eta) / s.alpha;
        let mut ratios = Vec::new();
        let mut raw = Vec::new();
        for (sol, &lambda) in solutions.iter().zip(&s.lambdas) {
            let ratio = pde::schauder_ratio(sol, s.theta, eta)?;
            let r = ratio / (1.0 + lambda).powf(exponent);
            table.push(&[lambda, eta, s.theta, ratio, r]);
            ratios.push(ratio);
            raw.push(r);
        }
        let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let slope = if s.lambdas.len() >= 2 {
            let x: Vec<f64> = s.lambdas.iter().map(|l| 1.0 + l).collect();
            stats::log_log_fit(&x, &raw)?.slope
        } else {
            f64::NAN
        };
        fits.push(SchauderFit {
            eta,
            slope,
            target: -exponent,
            spread,
        });
    }
    Ok(SchauderOutput {
        fits,
        table: ResultTable::new("schauder_sweep", table, cfg),
    })
}

pub fn run_mollifier_check(cfg: &ExperimentConfig) -> Result<MollifierOutput> {
    let m = cfg.mollifier.as_ref().ok_or_else(|| cfg_err("missing [mollifier] table"))?;
    let grid = PeriodicGrid::circle(m.grid_points)?;
    let e = Expr::parse(&m.function)?;
    let f = GridFunction::from_fn(grid, |x| e.eval_tx(0.0, &[x[0]]));
    let mut table = CsvTable::new(
        "mollifier_check/v1",
        &["delta", "kappa", "n", "growth_norm", "decay_norm"],
    );
    let reports: Vec<besov::MollifierSlopeReport> = m
        .deltas
        .iter()
        .map(|&delta| {
            let kappa = match m.smoothness {
                Some(s) => m.kappa.min(s - delta).max(0.0),
                None => m.kappa,
            };
            besov::mollifier_rate_check(&f, kappa, delta, &m.n_list)
        })
        .collect::<Result<_>>()?;
    for r in &reports {
        for ((n, g), dn) in r.n_list.iter().zip(&r.growth_norms).zip(&r.decay_norms) {
            table.push(&[r.delta, r.kappa, *n, *g, *dn]);
        }
    }
    Ok(MollifierOutput {
        reports,
        table: ResultTable::new("mollifier_check", table, cfg),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
    pub rows: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub kind: ExperimentKind,
    pub master_seed: u64,
    pub threads: Option<usize>,
    pub config: String,
    pub config_sha256: String,
    pub outputs: Vec<ManifestEntry>,
    pub summary: Vec<String>,
    pub created_unix: u64,
}

/// Writes every table as `<name>.csv` plus `manifest.json` into `out`.
pub fn write_outputs(
    out: &Path,
    cfg: &ExperimentConfig,
    output: &ExperimentOutput,
    threads: Option<usize>,
) -> Result<(Manifest, Vec<PathBuf>)> {
    std::fs::create_dir_all(out)?;
    let mut outputs = Vec::new();
    let mut files = Vec::new();
    for t in output.tables() {
        let path = out.join(format!("{}.csv", t.name));
        t.table.write(&path)?;
        outputs.push(ManifestEntry {
            file: format!("{}.csv", t.name),
            sha256: t.content_hash(),
            rows: t.table.rows.len(),
        });
        files.push(path);
    }
    let config = cfg.to_toml();
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        kind: cfg.kind,
        master_seed: cfg.master_seed,
        threads,
        config_sha256: sha256_hex(config.as_bytes()),
        config,
        outputs,
        summary: output.summary(),
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    };
    let path = out.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest).expect("manifest serializes"))?;
    files.push(path);
    Ok((manifest, files))
}

/// `--threads` if given, else `LEVY_AVG_THREADS`, else the global pool.
pub fn resolve_threads(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| std::env::var(THREADS_ENV).ok()?.trim().parse().ok())
}
