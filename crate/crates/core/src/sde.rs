//! Euler schemes for the multiscale SDE
//! `dX^ε = b(t/ε, X^ε)dt + σ(t/ε, X^ε)dL`, its averaged counterpart
//! `dX̄ = b̄(X̄)dt + σ̄(X̄)dL`, and the slow-fast system
//! `dX = f(X, Y)dt + σ(X)dL`, `dY = ε⁻¹B(Y)dt + ε^{-1/2}dW`.
//!
//! Every scheme consumes a [`StablePathIncrements`] realization, so coupled
//! runs share bit-identical noise.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::stable_noise::{sample_gaussian_steps, StablePathIncrements, TimeGrid};

const MAX_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Expr(Expr),
    /// `a(t mod period)·h(t, x)` with `a` linearly interpolated from
    /// equispaced samples over one period.
    PeriodicTable {
        period: f64,
        samples: Vec<f64>,
        spatial: Expr,
    },
    /// `a(t, x)·h(x₁ mod period)` with `h` linearly interpolated from
    /// equispaced samples over one period.
    SpatialTable {
        period: f64,
        samples: Vec<f64>,
        temporal: Expr,
    },
    /// `Σᵢ wᵢ·g(t, x, yᵢ)`: a quadrature average over the fast variable.
    FastAverage {
        integrand: Expr,
        nodes: Vec<[f64; MAX_DIM]>,
        weights: Vec<f64>,
    },
}

impl Field {
    pub fn parse(source: &str) -> Result<Self> {
        Ok(Field::Expr(Expr::parse(source)?))
    }

    pub fn constant(c: f64) -> Self {
        Field::Expr(Expr::constant(c))
    }

    pub fn eval(&self, v: &expr::Vars) -> f64 {
        match self {
            Field::Expr(e) => e.eval(v),
            Field::PeriodicTable {
                period,
                samples,
                spatial,
            } => {
                interpolate_periodic(samples, v[expr::T] / period) * spatial.eval(v)
            }
            Field::SpatialTable {
                period,
                samples,
                temporal,
            } => temporal.eval(v) * interpolate_periodic(samples, v[expr::X1] / period),
            Field::FastAverage {
                integrand,
                nodes,
                weights,
            } => {
                let mut u = *v;
                nodes
                    .iter()
                    .zip(weights)
                    .map(|(y, w)| {
                        u[expr::Y1..expr::Y1 + MAX_DIM].copy_from_slice(y);
                        w * integrand.eval(&u)
                    })
                    .sum()
            }
        }
    }

    pub fn eval_tx(&self, t: f64, x: &[f64]) -> f64 {
        self.eval(&expr::vars(t, x, &[]))
    }

    pub fn depends_on_time(&self) -> bool {
        match self {
            Field::Expr(e) => e.depends_on_time(),
            Field::PeriodicTable { samples, spatial, .. } => {
                spatial.depends_on_time() || samples.iter().any(|s| *s != samples[0])
            }
            Field::SpatialTable { temporal, .. } => temporal.depends_on_time(),
            Field::FastAverage { integrand, .. } => integrand.depends_on_time(),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Field::Expr(e) => e.is_constant(),
            Field::PeriodicTable { spatial, .. } => !self.depends_on_time() && spatial.is_constant(),
            Field::SpatialTable { samples, temporal, .. } => {
                temporal.is_constant() && samples.iter().all(|s| *s == samples[0])
            }
            Field::FastAverage { integrand, .. } => integrand.is_constant(),
        }
    }

    fn uses_fast_variable(&self) -> bool {
        match self {
            Field::Expr(e) => e.max_y_index() > 0,
            Field::PeriodicTable { spatial, .. } => spatial.max_y_index() > 0,
            Field::SpatialTable { temporal, .. } => temporal.max_y_index() > 0,
            Field::FastAverage { .. } => false,
        }
    }

    fn max_x_index(&self) -> usize {
        match self {
            Field::Expr(e) => e.max_x_index(),
            Field::PeriodicTable { spatial, .. } => spatial.max_x_index(),
            Field::SpatialTable { temporal, .. } => temporal.max_x_index().max(1),
            Field::FastAverage { integrand, .. } => integrand.max_x_index(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Field::Expr(_) => Ok(()),
            Field::PeriodicTable { period, samples, .. } | Field::SpatialTable { period, samples, .. } => {
                if !(*period > 0.0) || samples.is_empty() {
                    return Err(Error::param("periodic table needs a positive period and samples"));
                }
                Ok(())
            }
            Field::FastAverage { nodes, weights, .. } => {
                if nodes.len() != weights.len() || nodes.is_empty() {
                    return Err(Error::Shape("quadrature nodes and weights differ".into()));
                }
                Ok(())
            }
        }
    }
}

/// Linear interpolation of equispaced samples of a 1-periodic function.
fn interpolate_periodic(samples: &[f64], s: f64) -> f64 {
    let n = samples.len();
    let s = s.rem_euclid(1.0) * n as f64;
    let i = (s.floor() as usize).min(n - 1);
    let w = s - i as f64;
    samples[i] * (1.0 - w) + samples[(i + 1) % n] * w
}

#[derive(Debug, Clone, PartialEq)]
pub enum TimeStructure {
    Autonomous,
    Periodic(f64),
    /// Finite trigonometric structure with the listed angular frequencies.
    AlmostPeriodic(Vec<f64>),
    Tabulated,
}

/// Drift `b(t, x) ∈ ℝ^d` and diffusion `σ(t, x) ∈ ℝ^{d×d}` (row-major, or a
/// single entry meaning `σ = s·I`).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSpec {
    drift: Vec<Field>,
    diffusion: Vec<Field>,
    holder_beta: f64,
    time_structure: TimeStructure,
    lambda1: f64,
}

const LATTICE: usize = 10;

impl CoefficientSpec {
    /// Validates shapes and spot-checks uniform ellipticity of `σ` on a
    /// `10 × 10 × 10` lattice of `(t, x, ξ)`.
    pub fn new(
        drift: Vec<Field>,
        diffusion: Vec<Field>,
        holder_beta: f64,
        time_structure: TimeStructure,
    ) -> Result<Self> {
        let d = drift.len();
        if !(1..=MAX_DIM).contains(&d) {
            return Err(Error::param(format!("state dimension must be 1..=3, got {d}")));
        }
        if diffusion.len() != 1 && diffusion.len() != d * d {
            return Err(Error::Shape(format!(
                "diffusion needs 1 or {} entries, got {}",
                d * d,
                diffusion.len()
            )));
        }
        for f in drift.iter().chain(&diffusion) {
            f.validate()?;
            if f.max_x_index() > d {
                return Err(Error::param(format!("coefficient uses x{} beyond dimension {d}", f.max_x_index())));
            }
            if f.uses_fast_variable() {
                return Err(Error::param("drift and diffusion may not use the fast variable y"));
            }
        }
        let time_dependent = drift.iter().chain(&diffusion).any(Field::depends_on_time);
        match &time_structure {
            TimeStructure::Autonomous if time_dependent => {
                return Err(Error::param("coefficients depend on t but are declared autonomous"));
            }
            TimeStructure::Periodic(p) if !(*p > 0.0) => {
                return Err(Error::param("period must be positive"));
            }
            TimeStructure::AlmostPeriodic(freqs) if freqs.is_empty() => {
                return Err(Error::param("almost-periodic structure needs frequencies"));
            }
            _ => {}
        }
        let mut spec = Self {
            drift,
            diffusion,
            holder_beta,
            time_structure,
            lambda1: 1.0,
        };
        spec.lambda1 = spec.spot_check_ellipticity()?;
        Ok(spec)
    }

    /// Additive noise `σ = scale·I` with expression drift components.
    pub fn additive(drift: &[&str], scale: f64, holder_beta: f64, time_structure: TimeStructure) -> Result<Self> {
        let drift = drift.iter().map(|s| Field::parse(s)).collect::<Result<Vec<_>>>()?;
        Self::new(drift, vec![Field::constant(scale)], holder_beta, time_structure)
    }

    pub fn dim(&self) -> usize {
        self.drift.len()
    }

    pub fn drift(&self) -> &[Field] {
        &self.drift
    }

    pub fn diffusion(&self) -> &[Field] {
        &self.diffusion
    }

    pub fn holder_beta(&self) -> f64 {
        self.holder_beta
    }

    pub fn time_structure(&self) -> &TimeStructure {
        &self.time_structure
    }

    /// Smallest `Λ₁` consistent with the lattice spot-check.
    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn is_additive(&self) -> bool {
        self.diffusion.iter().all(Field::is_constant)
    }

    pub fn is_autonomous(&self) -> bool {
        !self.drift.iter().chain(&self.diffusion).any(Field::depends_on_time)
    }

    pub fn eval_drift(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let v = expr::vars(t, x, &[]);
        for (o, f) in out.iter_mut().zip(&self.drift) {
            *o = f.eval(&v);
        }
    }

    /// Writes the full `d × d` matrix into `out`.
    pub fn eval_diffusion(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        let v = expr::vars(t, x, &[]);
        if self.diffusion.len() == 1 {
            let s = self.diffusion[0].eval(&v);
            for i in 0..d {
                for j in 0..d {
                    out[i * d + j] = if i == j { s } else { 0.0 };
                }
            }
        } else {
            for (o, f) in out.iter_mut().zip(&self.diffusion) {
                *o = f.eval(&v);
            }
        }
    }

    fn spot_check_ellipticity(&self) -> Result<f64> {
        let d = self.dim();
        let t_span = match &self.time_structure {
            TimeStructure::Periodic(p) => *p,
            _ => 10.0,
        };
        let golden = 0.618_033_988_749_895;
        let mut q_min = f64::INFINITY;
        let mut q_max: f64 = 0.0;
        let mut sigma = [0.0; MAX_DIM * MAX_DIM];
        for it in 0..LATTICE {
            let t = t_span * it as f64 / LATTICE as f64;
            for ix in 0..LATTICE {
                let mut x = [0.0; MAX_DIM];
                for (a, xa) in x.iter_mut().enumerate().take(d) {
                    *xa = -3.0 + 6.0 * ((ix as f64 + 0.5) / LATTICE as f64 + a as f64 * golden).fract();
                }
                self.eval_diffusion(t, &x[..d], &mut sigma);
                for ik in 0..LATTICE {
                    let mut xi = [0.0; MAX_DIM];
                    if ik < d {
                        xi[ik] = 1.0;
                    } else {
                        for (a, v) in xi.iter_mut().enumerate().take(d) {
                            *v = (std::f64::consts::TAU * (ik as f64 / LATTICE as f64 + a as f64 * golden))
                                .cos()
                                + if a == ik % d { 1.0 } else { 0.0 };
                        }
                    }
                    let norm2: f64 = xi[..d].iter().map(|v| v * v).sum();
                    if norm2 == 0.0 {
                        continue;
                    }
                    let mut img2 = 0.0;
                    for i in 0..d {
                        let r: f64 = (0..d).map(|j| sigma[i * d + j] * xi[j]).sum();
                        img2 += r * r;
                    }
                    let q = img2 / norm2;
                    if !q.is_finite() {
                        return Err(Error::param("diffusion is not finite on the check lattice"));
                    }
                    q_min = q_min.min(q);
                    q_max = q_max.max(q);
                }
            }
        }
        if q_min <= 1e-12 {
            return Err(Error::param("diffusion degenerates on the check lattice"));
        }
        Ok(q_max.max(1.0 / q_min))
    }
}

/// A system the Euler scheme can step.
pub trait SdeSystem: Sync {
    fn dim(&self) -> usize;
    fn alpha(&self) -> f64;
    fn x0(&self) -> &[f64];
    fn drift(&self, t: f64, x: &[f64], out: &mut [f64]);
    fn diffusion(&self, t: f64, x: &[f64], out: &mut [f64]);
    /// Largest step that resolves the system's fast time scale.
    fn max_resolved_step(&self) -> Option<f64> {
        None
    }
    fn strict(&self) -> bool {
        false
    }
}

fn check_x0(x0: &[f64], d: usize) -> Result<()> {
    if x0.len() != d {
        return Err(Error::Shape(format!("initial state has {} components, expected {d}", x0.len())));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::param(format!("alpha must lie in (0, 2], got {alpha}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiscaleSdeSpec {
    pub coeffs: CoefficientSpec,
    pub alpha: f64,
    pub epsilon: f64,
    pub x0: Vec<f64>,
    /// Escalates an under-resolved step from a warning to an error.
    pub strict: bool,
}

impl MultiscaleSdeSpec {
    pub fn new(coeffs: CoefficientSpec, alpha: f64, epsilon: f64, x0: Vec<f64>) -> Result<Self> {
        check_alpha(alpha)?;
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::param(format!("epsilon must lie in (0, 1], got {epsilon}")));
        }
        check_x0(&x0, coeffs.dim())?;
        Ok(Self {
            coeffs,
            alpha,
            epsilon,
            x0,
            strict: false,
        })
    }

    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }
}

impl SdeSystem for MultiscaleSdeSpec {
    fn dim(&self) -> usize {
        self.coeffs.dim()
    }
    fn alpha(&self) -> f64 {
        self.alpha
    }
    fn x0(&self) -> &[f64] {
        &self.x0
    }
    fn drift(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self.coeffs.eval_drift(t / self.epsilon, x, out)
    }
    fn diffusion(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self.coeffs.eval_diffusion(t / self.epsilon, x, out)
    }
    fn max_resolved_step(&self) -> Option<f64> {
        if self.coeffs.is_autonomous() {
            None
        } else {
            Some(self.epsilon / 10.0)
        }
    }
    fn strict(&self) -> bool {
        self.strict
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AveragedSdeSpec {
    pub coeffs: CoefficientSpec,
    pub alpha: f64,
    pub x0: Vec<f64>,
}

impl AveragedSdeSpec {
    pub fn new(coeffs: CoefficientSpec, alpha: f64, x0: Vec<f64>) -> Result<Self> {
        check_alpha(alpha)?;
        if !coeffs.is_autonomous() {
            return Err(Error::param("averaged coefficients must not depend on t"));
        }
        check_x0(&x0, coeffs.dim())?;
        Ok(Self { coeffs, alpha, x0 })
    }
}

impl SdeSystem for AveragedSdeSpec {
    fn dim(&self) -> usize {
        self.coeffs.dim()
    }
    fn alpha(&self) -> f64 {
        self.alpha
    }
    fn x0(&self) -> &[f64] {
        &self.x0
    }
    fn drift(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self.coeffs.eval_drift(t, x, out)
    }
    fn diffusion(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self.coeffs.eval_diffusion(t, x, out)
    }
}

/// States on a time grid, row `k` holding `X_{t_k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    grid: TimeGrid,
    dim: usize,
    values: Vec<f64>,
    warning: Option<String>,
}

impl SamplePath {
    pub fn new(grid: TimeGrid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != (grid.n_steps() + 1) * dim {
            return Err(Error::Shape("path length does not match its grid".into()));
        }
        Ok(Self {
            grid,
            dim,
            values,
            warning: None,
        })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.grid.n_steps())
    }

    pub fn component(&self, i: usize) -> Vec<f64> {
        self.values.iter().skip(i).step_by(self.dim).copied().collect()
    }

    /// Set when the step did not resolve the fast scale in non-strict mode.
    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }
}

fn check_resolution(sys: &dyn SdeSystem, dt: f64) -> Result<Option<String>> {
    match sys.max_resolved_step() {
        Some(limit) if dt > limit * (1.0 + 1e-12) => {
            let msg = format!("dt = {dt} exceeds the resolution limit {limit}");
            if sys.strict() {
                Err(Error::Resolution(msg))
            } else {
                Ok(Some(msg))
            }
        }
        _ => Ok(None),
    }
}

/// `X_{k+1} = X_k + b(t_k, X_k)·dt + σ(t_k, X_k)·ΔL_k`.
pub fn euler_maruyama(sys: &dyn SdeSystem, noise: &StablePathIncrements) -> Result<SamplePath> {
    let d = sys.dim();
    if noise.dim() != d {
        return Err(Error::Shape(format!("noise has dimension {}, system {d}", noise.dim())));
    }
    if (noise.params().alpha() - sys.alpha()).abs() > 1e-15 {
        return Err(Error::param("noise and system disagree on alpha"));
    }
    let grid = noise.grid();
    let dt = grid.dt();
    let warning = check_resolution(sys, dt)?;
    let mut values = Vec::with_capacity((grid.n_steps() + 1) * d);
    values.extend_from_slice(sys.x0());
    let mut x = [0.0; MAX_DIM];
    x[..d].copy_from_slice(sys.x0());
    let mut b = [0.0; MAX_DIM];
    let mut s = [0.0; MAX_DIM * MAX_DIM];
    for (k, dl) in noise.rows().enumerate() {
        let t = grid.time(k);
        sys.drift(t, &x[..d], &mut b[..d]);
        sys.diffusion(t, &x[..d], &mut s[..d * d]);
        let mut next = [0.0; MAX_DIM];
        for i in 0..d {
            let jump: f64 = (0..d).map(|j| s[i * d + j] * dl[j]).sum();
            next[i] = x[i] + b[i] * dt + jump;
        }
        x = next;
        values.extend_from_slice(&x[..d]);
    }
    let mut path = SamplePath::new(grid, d, values)?;
    path.warning = warning;
    Ok(path)
}

/// Drives `X^ε` and `X̄` with the same increments.
pub fn simulate_coupled(
    ms: &MultiscaleSdeSpec,
    avg: &AveragedSdeSpec,
    noise: &StablePathIncrements,
) -> Result<(SamplePath, SamplePath)> {
    if ms.alpha != avg.alpha {
        return Err(Error::param(format!(
            "coupled systems need one alpha, got {} and {}",
            ms.alpha, avg.alpha
        )));
    }
    if ms.x0 != avg.x0 {
        return Err(Error::param("coupled systems need one initial state"));
    }
    Ok((euler_maruyama(ms, noise)?, euler_maruyama(avg, noise)?))
}

#[derive(Debug, Clone, PartialEq)]
pub enum FastDrift {
    /// `B(y) = −a·y` with `a > 0`; stepped exactly.
    Linear(f64),
    /// Component expressions in `y1..y3`; stepped by Euler.
    General(Vec<Expr>),
}

impl FastDrift {
    fn dim_hint(&self) -> Option<usize> {
        match self {
            FastDrift::Linear(_) => None,
            FastDrift::General(b) => Some(b.len()),
        }
    }

    fn eval(&self, y: &[f64], out: &mut [f64]) {
        match self {
            FastDrift::Linear(a) => {
                for (o, v) in out.iter_mut().zip(y) {
                    *o = -a * v;
                }
            }
            FastDrift::General(b) => {
                let v = expr::vars(0.0, &[], y);
                for (o, e) in out.iter_mut().zip(b) {
                    *o = e.eval(&v);
                }
            }
        }
    }

    /// Checks that `max_{|y| = r}⟨B(y), y⟩` is negative and decreasing over
    /// `r ∈ {4, 16, 64}`.
    fn spot_check_dissipative(&self, m: usize) -> Result<()> {
        if let FastDrift::Linear(a) = self {
            return if *a > 0.0 {
                Ok(())
            } else {
                Err(Error::param("linear fast drift needs a > 0"))
            };
        }
        let mut prev = f64::INFINITY;
        for r in [4.0, 16.0, 64.0] {
            let mut worst = f64::NEG_INFINITY;
            for k in 0..LATTICE * 2 {
                let mut y = [0.0; MAX_DIM];
                let theta = std::f64::consts::TAU * k as f64 / (LATTICE * 2) as f64;
                match m {
                    1 => y[0] = if k % 2 == 0 { r } else { -r },
                    _ => {
                        y[0] = r * theta.cos();
                        y[1] = r * theta.sin() * if m == 3 { std::f64::consts::FRAC_1_SQRT_2 } else { 1.0 };
                        if m == 3 {
                            y[2] = r * theta.sin() * std::f64::consts::FRAC_1_SQRT_2;
                        }
                    }
                }
                let mut b = [0.0; MAX_DIM];
                self.eval(&y[..m], &mut b[..m]);
                let dot: f64 = (0..m).map(|i| b[i] * y[i]).sum();
                worst = worst.max(dot);
            }
            if !(worst < 0.0 && worst < prev) {
                return Err(Error::param("fast drift fails the dissipativity check"));
            }
            prev = worst;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlowFastSpec {
    /// `f(x, y) ∈ ℝⁿ`, written in `x1..` and `y1..`.
    pub f: Vec<Field>,
    pub fast_drift: FastDrift,
    pub epsilon: f64,
    pub alpha: f64,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    /// `σ(x)`: one entry (`s·I`) or `n × n` row-major.
    pub sigma_slow: Vec<Field>,
}

impl SlowFastSpec {
    pub fn new(
        f: Vec<Field>,
        fast_drift: FastDrift,
        epsilon: f64,
        alpha: f64,
        x0: Vec<f64>,
        y0: Vec<f64>,
        sigma_slow: Vec<Field>,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::param(format!("epsilon must lie in (0, 1], got {epsilon}")));
        }
        let n = f.len();
        if !(1..=MAX_DIM).contains(&n) {
            return Err(Error::param("slow dimension must be 1..=3"));
        }
        check_x0(&x0, n)?;
        let m = y0.len();
        if !(1..=MAX_DIM).contains(&m) || fast_drift.dim_hint().is_some_and(|h| h != m) {
            return Err(Error::Shape("fast drift and y0 disagree on the fast dimension".into()));
        }
        if sigma_slow.len() != 1 && sigma_slow.len() != n * n {
            return Err(Error::Shape("slow diffusion needs 1 or n² entries".into()));
        }
        fast_drift.spot_check_dissipative(m)?;
        Ok(Self {
            f,
            fast_drift,
            epsilon,
            alpha,
            x0,
            y0,
            sigma_slow,
        })
    }

    pub fn slow_dim(&self) -> usize {
        self.f.len()
    }

    pub fn fast_dim(&self) -> usize {
        self.y0.len()
    }
}

/// Euler for the slow component with `f(X_k, Y_k)`; the fast component uses
/// the exact Ornstein–Uhlenbeck transition when `B` is linear and Euler
/// otherwise. Brownian increments come from `seed_w`, keyed by the noise's
/// path index.
pub fn simulate_slow_fast(
    spec: &SlowFastSpec,
    noise: &StablePathIncrements,
    seed_w: u64,
) -> Result<(SamplePath, SamplePath)> {
    if seed_w == noise.seed() {
        return Err(Error::IndependenceViolation(format!(
            "Brownian and stable streams share seed {seed_w}"
        )));
    }
    let (n, m) = (spec.slow_dim(), spec.fast_dim());
    if noise.dim() != n {
        return Err(Error::Shape("noise dimension differs from the slow dimension".into()));
    }
    if (noise.params().alpha() - spec.alpha).abs() > 1e-15 {
        return Err(Error::param("noise and system disagree on alpha"));
    }
    let grid = noise.grid();
    let dt = grid.dt();
    let h = dt / spec.epsilon;
    if matches!(spec.fast_drift, FastDrift::General(_)) && h > 0.1 {
        return Err(Error::Resolution(format!(
            "Euler fast step needs dt ≤ ε/10, got dt/ε = {h}"
        )));
    }
    let gauss = sample_gaussian_steps(grid.n_steps(), m, seed_w, noise.path_index());
    let (ou_decay, ou_sd) = match spec.fast_drift {
        FastDrift::Linear(a) => ((-a * h).exp(), (-(-2.0 * a * h).exp_m1() / (2.0 * a)).sqrt()),
        FastDrift::General(_) => (0.0, h.sqrt()),
    };

    let mut xs = Vec::with_capacity((grid.n_steps() + 1) * n);
    let mut ys = Vec::with_capacity((grid.n_steps() + 1) * m);
    let mut x = [0.0; MAX_DIM];
    let mut y = [0.0; MAX_DIM];
    x[..n].copy_from_slice(&spec.x0);
    y[..m].copy_from_slice(&spec.y0);
    xs.extend_from_slice(&x[..n]);
    ys.extend_from_slice(&y[..m]);
    let mut s = [0.0; MAX_DIM * MAX_DIM];
    let mut bf = [0.0; MAX_DIM];
    for (k, dl) in noise.rows().enumerate() {
        let t = grid.time(k);
        let v = expr::vars(t, &x[..n], &y[..m]);
        let fx: Vec<f64> = spec.f.iter().map(|f| f.eval(&v)).collect();
        if spec.sigma_slow.len() == 1 {
            let c = spec.sigma_slow[0].eval(&v);
            for i in 0..n {
                for j in 0..n {
                    s[i * n + j] = if i == j { c } else { 0.0 };
                }
            }
        } else {
            for (o, f) in s.iter_mut().zip(&spec.sigma_slow) {
                *o = f.eval(&v);
            }
        }
        let mut next = [0.0; MAX_DIM];
        for i in 0..n {
            let jump: f64 = (0..n).map(|j| s[i * n + j] * dl[j]).sum();
            next[i] = x[i] + fx[i] * dt + jump;
        }
        x = next;

        let xi = &gauss[k * m..(k + 1) * m];
        match spec.fast_drift {
            FastDrift::Linear(_) => {
                for i in 0..m {
                    y[i] = y[i] * ou_decay + ou_sd * xi[i];
                }
            }
            FastDrift::General(_) => {
                spec.fast_drift.eval(&y[..m], &mut bf[..m]);
                for i in 0..m {
                    y[i] += bf[i] * h + ou_sd * xi[i];
                }
            }
        }
        xs.extend_from_slice(&x[..n]);
        ys.extend_from_slice(&y[..m]);
    }
    Ok((SamplePath::new(grid, n, xs)?, SamplePath::new(grid, m, ys)?))
}

/// `(sup_k |a_k − b_k|)^p` with the Euclidean norm on states.
pub fn sup_error(a: &SamplePath, b: &SamplePath, p: f64) -> Result<f64> {
    if a.grid != b.grid || a.dim != b.dim {
        return Err(Error::Shape("paths live on different grids".into()));
    }
    let d = a.dim;
    let sup = a
        .values
        .chunks(d)
        .zip(b.values.chunks(d))
        .map(|(u, v)| u.iter().zip(v).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    Ok(sup.powf(p))
}

#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub paths: Vec<SamplePath>,
    pub grid: TimeGrid,
    pub seed: u64,
    pub label: String,
}

impl PathEnsemble {
    /// Simulates `m` paths in parallel; path `i` is `simulate(i)`. The
    /// result does not depend on the worker count.
    pub fn simulate(
        m: usize,
        seed: u64,
        label: impl Into<String>,
        simulate: impl Fn(u64) -> Result<SamplePath> + Sync + Send,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::param("an ensemble needs at least one path"));
        }
        let paths = (0..m as u64).into_par_iter().map(simulate).collect::<Result<Vec<_>>>()?;
        let grid = paths[0].grid;
        if paths.iter().any(|p| p.grid != grid) {
            return Err(Error::Shape("ensemble paths live on different grids".into()));
        }
        Ok(Self {
            paths,
            grid,
            seed,
            label: label.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Component `i` of every path at grid index `k`.
    pub fn marginal(&self, k: usize, i: usize) -> Vec<f64> {
        self.paths.iter().map(|p| p.state(k)[i]).collect()
    }
}
