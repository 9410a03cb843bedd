//! Spectral solver for the nonlocal equations with `σ = cI` on the torus:
//!
//! ```text
//! ∂_t u = −(c²(−Δ))^{α/2} u − λu + g·∇u + f,   u(0) = 0
//! ```
//!
//! and the resolvent problem `ℒv − λv + g·∇v = f`.
//!
//! Time stepping is an exponential integrator: the linear part
//! `r_k = c^α|k|^α + λ` is integrated exactly per mode, the forcing is
//! taken piecewise linear in time, and the drift term uses the second-order
//! Cox–Matthews predictor–corrector. With `g = 0` and tabulated or constant
//! forcing every mode is exact up to rounding.

use rustfft::num_complex::Complex64;

use crate::besov;
use crate::error::{Error, Result};
use crate::spectral::{self, GridFunction, PeriodicGrid};

#[derive(Debug, Clone, PartialEq)]
pub enum Forcing {
    Constant(GridFunction),
    /// Samples `f(t_i, ·)` at strictly increasing times covering `[0, T]`,
    /// linearly interpolated in between.
    Tabulated {
        times: Vec<f64>,
        values: Vec<GridFunction>,
    },
}

impl Forcing {
    pub fn grid(&self) -> PeriodicGrid {
        match self {
            Forcing::Constant(f) => f.grid(),
            Forcing::Tabulated { values, .. } => values[0].grid(),
        }
    }

    /// Tabulates `f(t, x)` on `n + 1` equally spaced times over `[0, horizon]`.
    pub fn tabulate(
        grid: PeriodicGrid,
        horizon: f64,
        n: usize,
        f: impl Fn(f64, [f64; 2]) -> f64,
    ) -> Self {
        let times: Vec<f64> = (0..=n).map(|i| horizon * i as f64 / n as f64).collect();
        let values = times
            .iter()
            .map(|&t| GridFunction::from_fn(grid, |x| f(t, x)))
            .collect();
        Forcing::Tabulated { times, values }
    }

    fn slices(&self) -> Vec<&GridFunction> {
        match self {
            Forcing::Constant(f) => vec![f],
            Forcing::Tabulated { values, .. } => values.iter().collect(),
        }
    }

    fn reversed(&self, horizon: f64) -> Self {
        match self {
            Forcing::Constant(f) => Forcing::Constant(f.clone()),
            Forcing::Tabulated { times, values } => Forcing::Tabulated {
                times: times.iter().rev().map(|t| horizon - t).collect(),
                values: values.iter().rev().cloned().collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonlocalPdeSpec {
    pub alpha: f64,
    pub c: f64,
    pub lambda: f64,
    /// Vector field `g`, one component per grid axis; `None` means `g = 0`.
    pub drift: Option<Vec<GridFunction>>,
    /// Declared Hölder exponent of `g` (1 when `g = 0`).
    pub drift_holder: f64,
    pub forcing: Forcing,
    pub horizon: f64,
    pub dt: f64,
    /// Keep every `snapshot_stride`-th step (the final time is always kept).
    pub snapshot_stride: usize,
}

impl NonlocalPdeSpec {
    pub fn new(alpha: f64, c: f64, lambda: f64, forcing: Forcing, horizon: f64, dt: f64) -> Self {
        Self {
            alpha,
            c,
            lambda,
            drift: None,
            drift_holder: 1.0,
            forcing,
            horizon,
            dt,
            snapshot_stride: 1,
        }
    }

    pub fn with_drift(mut self, drift: Vec<GridFunction>, holder: f64) -> Self {
        self.drift = Some(drift);
        self.drift_holder = holder;
        self
    }

    pub fn with_snapshot_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.forcing.grid()
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt - 1e-9).ceil().max(1.0) as usize
    }

    /// The step actually used: `horizon / n_steps`, never larger than `dt`.
    pub fn step(&self) -> f64 {
        self.horizon / self.n_steps() as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::param(format!("alpha must lie in (0, 2), got {}", self.alpha)));
        }
        if !(self.c > 0.0) {
            return Err(Error::param("diffusion coefficient c must be positive"));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::param("lambda must be nonnegative"));
        }
        if !(self.horizon > 0.0 && self.dt > 0.0) {
            return Err(Error::param("horizon and dt must be positive"));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::param("snapshot stride must be at least 1"));
        }
        let grid = self.grid();
        if let Forcing::Tabulated { times, values } = &self.forcing {
            if times.len() != values.len() || times.len() < 2 {
                return Err(Error::Shape("forcing table needs matching times and values".into()));
            }
            if times.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::param("forcing times must increase strictly"));
            }
            let tol = 1e-12 * self.horizon.max(1.0);
            if times[0] > tol || *times.last().unwrap() < self.horizon - tol {
                return Err(Error::param("forcing table must cover [0, horizon]"));
            }
            if values.iter().any(|v| v.grid() != grid) {
                return Err(Error::Shape("forcing slices live on different grids".into()));
            }
        }
        if let Some(g) = &self.drift {
            if g.len() != grid.dim() || g.iter().any(|c| c.grid() != grid) {
                return Err(Error::Shape("drift needs one component per axis on the forcing grid".into()));
            }
            let g_max = sup_norm_field(g);
            if g_max > 0.0 {
                let limit = 0.5 * grid.spacing() / g_max;
                if self.step() > limit {
                    return Err(Error::StepSize(format!(
                        "dt = {} exceeds 0.5·dx/‖g‖∞ = {limit}",
                        self.step()
                    )));
                }
            }
        }
        Ok(())
    }

    fn rates(&self) -> Vec<f64> {
        let grid = self.grid();
        let ca = self.c.powf(self.alpha);
        (0..grid.len())
            .map(|i| ca * grid.frequency_norm(i).powf(self.alpha) + self.lambda)
            .collect()
    }
}

fn sup_norm_field(g: &[GridFunction]) -> f64 {
    let n = g[0].values().len();
    (0..n)
        .map(|i| g.iter().map(|c| c.values()[i].powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// `(1 − e^{−z}) / z`.
fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 - z / 2.0
    } else {
        -(-z).exp_m1() / z
    }
}

/// `(z − 1 + e^{−z}) / z²`.
fn phi2(z: f64) -> f64 {
    if z.abs() < 1e-2 {
        0.5 - z / 6.0 + z * z / 24.0 - z * z * z / 120.0 + z.powi(4) / 720.0
    } else {
        (z + (-z).exp_m1()) / (z * z)
    }
}

#[derive(Debug, Clone)]
pub struct PdeSolution {
    pub times: Vec<f64>,
    pub snapshots: Vec<GridFunction>,
    pub spec: NonlocalPdeSpec,
}

impl PdeSolution {
    pub fn final_state(&self) -> &GridFunction {
        self.snapshots.last().expect("solution has at least the initial snapshot")
    }
}

struct ForcingCoeffs {
    times: Vec<f64>,
    coeffs: Vec<Vec<Complex64>>,
}

impl ForcingCoeffs {
    fn new(forcing: &Forcing) -> Self {
        match forcing {
            Forcing::Constant(f) => Self {
                times: vec![0.0],
                coeffs: vec![spectral::forward(f)],
            },
            Forcing::Tabulated { times, values } => Self {
                times: times.clone(),
                coeffs: values.iter().map(spectral::forward).collect(),
            },
        }
    }

    fn at(&self, t: f64) -> Vec<Complex64> {
        if self.coeffs.len() == 1 {
            return self.coeffs[0].clone();
        }
        let i = match self.times.partition_point(|&s| s <= t) {
            0 => 0,
            p => (p - 1).min(self.times.len() - 2),
        };
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        self.coeffs[i]
            .iter()
            .zip(&self.coeffs[i + 1])
            .map(|(a, b)| a * (1.0 - w) + b * w)
            .collect()
    }
}

/// Spectral coefficients of `g·∇u` given those of `u`.
fn drift_term(grid: PeriodicGrid, g: &[GridFunction], u_hat: &[Complex64]) -> Vec<Complex64> {
    let n = grid.n_points();
    let mut acc = vec![0.0; grid.len()];
    for (axis, comp) in g.iter().enumerate() {
        let d: Vec<Complex64> = u_hat
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let idx = grid.axis_indices(i)[axis];
                let k = if idx * 2 == n { 0.0 } else { grid.wavevector(i)[axis] };
                c * Complex64::new(0.0, k)
            })
            .collect();
        let du = spectral::inverse(grid, d);
        for ((a, gv), dv) in acc.iter_mut().zip(comp.values()).zip(du.values()) {
            *a += gv * dv;
        }
    }
    spectral::forward(&GridFunction::new(grid, acc).expect("same grid"))
}

/// Integrates forward from `u(0) = 0` to the horizon.
pub fn solve_forward(spec: &NonlocalPdeSpec) -> Result<PdeSolution> {
    spec.validate()?;
    let grid = spec.grid();
    let n_steps = spec.n_steps();
    let h = spec.step();
    let rates = spec.rates();
    let decay: Vec<f64> = rates.iter().map(|r| (-r * h).exp()).collect();
    let w1: Vec<f64> = rates.iter().map(|r| h * phi1(r * h)).collect();
    let w2: Vec<f64> = rates.iter().map(|r| h * phi2(r * h)).collect();
    let forcing = ForcingCoeffs::new(&spec.forcing);
    let zero = Complex64::new(0.0, 0.0);

    let mut u_hat = vec![zero; grid.len()];
    let mut times = vec![0.0];
    let mut snapshots = vec![GridFunction::zeros(grid)];
    let mut f_now = forcing.at(0.0);
    for step in 0..n_steps {
        let t_next = (step + 1) as f64 * h;
        let f_next = forcing.at(t_next);
        match &spec.drift {
            None => {
                for i in 0..u_hat.len() {
                    u_hat[i] = u_hat[i] * decay[i] + f_now[i] * w1[i] + (f_next[i] - f_now[i]) * w2[i];
                }
            }
            Some(g) => {
                let n_now = drift_term(grid, g, &u_hat);
                let pred: Vec<Complex64> = (0..u_hat.len())
                    .map(|i| u_hat[i] * decay[i] + (n_now[i] + f_now[i]) * w1[i])
                    .collect();
                let n_pred = drift_term(grid, g, &pred);
                for i in 0..u_hat.len() {
                    u_hat[i] = pred[i] + (n_pred[i] + f_next[i] - n_now[i] - f_now[i]) * w2[i];
                }
            }
        }
        f_now = f_next;
        if (step + 1) % spec.snapshot_stride == 0 || step + 1 == n_steps {
            times.push(t_next);
            snapshots.push(spectral::inverse(grid, u_hat.clone()));
        }
    }
    Ok(PdeSolution {
        times,
        snapshots,
        spec: spec.clone(),
    })
}

/// Solves `∂_t u + ℒu − λu + g·∇u + f = 0` on `[0, T]` with `u(T) = 0` by
/// running [`solve_forward`] on the time-reversed coefficients
/// (`ũ(r) = u(T − r)`) and reversing the snapshots.
pub fn solve_backward(spec: &NonlocalPdeSpec) -> Result<PdeSolution> {
    let mut reversed = spec.clone();
    reversed.forcing = spec.forcing.reversed(spec.horizon);
    let fwd = solve_forward(&reversed)?;
    let times = fwd.times.iter().rev().map(|t| spec.horizon - t).collect();
    let snapshots = fwd.snapshots.into_iter().rev().collect();
    Ok(PdeSolution {
        times,
        snapshots,
        spec: spec.clone(),
    })
}

/// Admissible range of `θ` for the constant-σ estimate: `(1 − α − β, β]`.
pub fn schauder_theta_window(alpha: f64, beta: f64) -> (f64, f64) {
    (1.0 - alpha - beta, beta)
}

/// Schauder quantity
/// `max_k ‖u(t_k)‖_{B^{θ+η}} · (1+λ)^{(α−η)/α} / max_k ‖f(t_k)‖_{B^θ}`,
/// with Besov norms standing in for the Hölder norms.
pub fn schauder_ratio(solution: &PdeSolution, theta: f64, eta: f64) -> Result<f64> {
    let spec = &solution.spec;
    let alpha = spec.alpha;
    if !(0.0..=alpha).contains(&eta) {
        return Err(Error::param(format!("eta must lie in [0, {alpha}], got {eta}")));
    }
    let (lo, hi) = schauder_theta_window(alpha, spec.drift_holder);
    if !(theta > lo && theta <= hi) {
        return Err(Error::param(format!("theta = {theta} outside ({lo}, {hi}]")));
    }
    let f_norm = spec
        .forcing
        .slices()
        .into_iter()
        .map(|f| besov::besov(f, theta))
        .fold(0.0, f64::max);
    if f_norm < 1e-300 {
        return Err(Error::Degenerate("forcing vanishes".into()));
    }
    let u_norm = max_solution_norm(solution, theta + eta);
    Ok(u_norm * (1.0 + spec.lambda).powf((alpha - eta) / alpha) / f_norm)
}

/// `max_k ‖u(t_k)‖_{B^s}` over the stored snapshots.
pub fn max_solution_norm(solution: &PdeSolution, s: f64) -> f64 {
    solution
        .snapshots
        .iter()
        .map(|u| besov::besov(u, s))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct EllipticSolution {
    pub v: GridFunction,
    pub iterations: usize,
    /// `‖ℒv − λv + g·∇v − f‖_∞`.
    pub residual: f64,
    /// Last observed ratio of successive update sizes.
    pub contraction: f64,
}

const ELLIPTIC_MAX_ITERS: usize = 2000;

/// Solves `ℒ_σ v − λv + g·∇v = f` with `ℒ_σ = −(c²(−Δ))^{α/2}` by the
/// fixed-point map `v̂ ← (ĝ·∇v − f̂) / (c^α|k|^α + λ)`.
///
/// Fails with [`Error::LambdaTooSmall`] when the iteration stops
/// contracting; the threshold `λ₀` is therefore detected, not predicted.
pub fn elliptic_solve(
    alpha: f64,
    c: f64,
    lambda: f64,
    g: Option<&[GridFunction]>,
    f: &GridFunction,
) -> Result<EllipticSolution> {
    if !(alpha > 0.0 && alpha < 2.0) || !(c > 0.0) {
        return Err(Error::param("need alpha in (0, 2) and c > 0"));
    }
    if !(lambda > 0.0) {
        return Err(Error::LambdaTooSmall { lambda });
    }
    let grid = f.grid();
    if let Some(g) = g {
        if g.len() != grid.dim() || g.iter().any(|c| c.grid() != grid) {
            return Err(Error::Shape("drift needs one component per axis on the forcing grid".into()));
        }
    }
    let ca = c.powf(alpha);
    let rates: Vec<f64> = (0..grid.len())
        .map(|i| ca * grid.frequency_norm(i).powf(alpha) + lambda)
        .collect();
    let f_hat = spectral::forward(f);
    let f_sup = f.sup_norm();
    let zero = Complex64::new(0.0, 0.0);
    let apply = |v_hat: &[Complex64]| -> Vec<Complex64> {
        let n_hat = match g {
            Some(g) => drift_term(grid, g, v_hat),
            None => vec![zero; v_hat.len()],
        };
        (0..v_hat.len()).map(|i| (n_hat[i] - f_hat[i]) / rates[i]).collect()
    };
    let mut v_hat = apply(&vec![zero; grid.len()]);
    let mut prev_step = f64::INFINITY;
    let mut contraction = 0.0;
    let mut iterations = 1;
    let tol = 1e-14 * f_sup.max(1e-300);
    if g.is_some() {
        loop {
            let next = apply(&v_hat);
            let step = spectral::inverse(
                grid,
                next.iter().zip(&v_hat).map(|(a, b)| a - b).collect(),
            )
            .sup_norm();
            v_hat = next;
            iterations += 1;
            if step <= tol {
                break;
            }
            if prev_step.is_finite() && prev_step > 0.0 {
                contraction = step / prev_step;
                if iterations > 3 && contraction >= 0.999 {
                    return Err(Error::LambdaTooSmall { lambda });
                }
            }
            if iterations >= ELLIPTIC_MAX_ITERS {
                return Err(Error::LambdaTooSmall { lambda });
            }
            prev_step = step;
        }
    }
    let v = spectral::inverse(grid, v_hat.clone());
    // residual ℒv − λv + g·∇v − f evaluated spectrally
    let n_hat = match g {
        Some(g) => drift_term(grid, g, &v_hat),
        None => vec![zero; v_hat.len()],
    };
    let res_hat: Vec<Complex64> = (0..v_hat.len())
        .map(|i| -v_hat[i] * rates[i] + n_hat[i] - f_hat[i])
        .collect();
    let residual = spectral::inverse(grid, res_hat).sup_norm();
    if residual > 1e-8 * f_sup.max(1e-300) {
        return Err(Error::Resolution(format!(
            "elliptic residual {residual} above 1e-8·‖f‖∞"
        )));
    }
    Ok(EllipticSolution {
        v,
        iterations,
        residual,
        contraction,
    })
}

/// Smallest `λ = start·2^m` (`m ≤ max_doublings`) for which
/// [`elliptic_solve`] contracts.
pub fn find_lambda0(
    alpha: f64,
    c: f64,
    g: Option<&[GridFunction]>,
    f: &GridFunction,
    start: f64,
    max_doublings: usize,
) -> Result<f64> {
    let mut lambda = start;
    for _ in 0..=max_doublings {
        match elliptic_solve(alpha, c, lambda, g, f) {
            Ok(_) => return Ok(lambda),
            Err(Error::LambdaTooSmall { .. }) => lambda *= 2.0,
            Err(e) => return Err(e),
        }
    }
    Err(Error::LambdaTooSmall { lambda })
}
