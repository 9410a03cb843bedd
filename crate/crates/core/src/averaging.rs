//! Averaged coefficients, the decay functionals `ℓ₁`, `ℓ₂`, the rate
//! exponents of the strong averaging principle and the `(α, β)` regions.
//!
//! Regions, with brackets taken literally:
//!
//! ```text
//! 𝒜₁ = (0,2) × (1−α/2, 1)
//! 𝒜₂ = (0,1] × (1−α, 1−α/2]  ∪  (1,2) × ((1−α)/2, 1−α/2]
//! 𝒜₀ = (2/3,1] × (2−3α/2, 1)  ∪  (1,2) × (α/2, 1)
//! ```

use std::fmt;
use std::num::NonZeroUsize;

use gauss_quad::hermite::GaussHermite;
use gauss_quad::legendre::GaussLegendre;
use serde::Serialize;

use crate::besov;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::sde::{CoefficientSpec, Field, TimeStructure};
use crate::spectral::{GridFunction, PeriodicGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RegionLabel {
    A0,
    #[serde(rename = "A1_only")]
    A1Only,
    A2,
    #[serde(rename = "outside")]
    Outside,
}

impl fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegionLabel::A0 => "A0",
            RegionLabel::A1Only => "A1_only",
            RegionLabel::A2 => "A2",
            RegionLabel::Outside => "outside",
        })
    }
}

pub fn in_a1(alpha: f64, beta: f64) -> bool {
    alpha > 0.0 && alpha < 2.0 && beta > 1.0 - alpha / 2.0 && beta < 1.0
}

pub fn in_a2(alpha: f64, beta: f64) -> bool {
    let upper = beta <= 1.0 - alpha / 2.0;
    (alpha > 0.0 && alpha <= 1.0 && beta > 1.0 - alpha && upper)
        || (alpha > 1.0 && alpha < 2.0 && beta > (1.0 - alpha) / 2.0 && upper)
}

pub fn in_a0(alpha: f64, beta: f64) -> bool {
    (alpha > 2.0 / 3.0 && alpha <= 1.0 && beta > 2.0 - 1.5 * alpha && beta < 1.0)
        || (alpha > 1.0 && alpha < 2.0 && beta > alpha / 2.0 && beta < 1.0)
}

pub fn region_classify(alpha: f64, beta: f64) -> Result<RegionLabel> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::param(format!("alpha must lie in (0, 2), got {alpha}")));
    }
    if !beta.is_finite() {
        return Err(Error::param("beta must be finite"));
    }
    Ok(if in_a0(alpha, beta) {
        RegionLabel::A0
    } else if in_a1(alpha, beta) {
        RegionLabel::A1Only
    } else if in_a2(alpha, beta) {
        RegionLabel::A2
    } else {
        RegionLabel::Outside
    })
}

pub const DEFAULT_IOTA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateSpec {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub iota: f64,
    pub p: f64,
}

impl RateSpec {
    pub fn new(alpha: f64, beta: f64, gamma: f64, iota: f64, p: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::param(format!("alpha must lie in (0, 2), got {alpha}")));
        }
        if !(gamma <= beta) {
            return Err(Error::param(format!("gamma = {gamma} exceeds beta = {beta}")));
        }
        if !(iota > 0.0) {
            return Err(Error::param("iota must be positive"));
        }
        if !(p >= 1.0) {
            return Err(Error::param(format!("moment order p must be at least 1, got {p}")));
        }
        Ok(Self {
            alpha,
            beta,
            gamma,
            iota,
            p,
        })
    }

    /// `δ₁ = [((1−α/2)∨(α/2) − γ) ∨ (2−3α/2−β) + ι] ∨ 0`.
    pub fn delta1(&self) -> f64 {
        let a = self.alpha;
        let first = (1.0 - a / 2.0).max(a / 2.0) - self.gamma;
        let second = 2.0 - 1.5 * a - self.beta;
        (first.max(second) + self.iota).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateReport {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub iota: f64,
    pub p: f64,
    pub delta1: f64,
    pub exponent: f64,
    pub region: RegionLabel,
}

/// Exponent `p(1∧α)/((1∧α)+δ₁)` of `ℓ₁(T/ε)` in the strong error bound.
pub fn theoretical_rate(spec: &RateSpec) -> Result<RateReport> {
    let region = region_classify(spec.alpha, spec.beta)?;
    if !in_a1(spec.alpha, spec.beta) {
        return Err(Error::Region {
            alpha: spec.alpha,
            beta: spec.beta,
            region: "A1",
        });
    }
    let m = spec.alpha.min(1.0);
    let delta1 = spec.delta1();
    Ok(RateReport {
        alpha: spec.alpha,
        beta: spec.beta,
        gamma: spec.gamma,
        iota: spec.iota,
        p: spec.p,
        delta1,
        exponent: spec.p * (m / (m + delta1)),
        region,
    })
}

/// Limit of the `γ = 0`, `p = 1` exponent as `ι → 0`: `2α/(2+α)` for
/// `α ≤ 1` and `2/(2+α)` for `α > 1`.
pub fn r1(alpha: f64) -> f64 {
    if alpha <= 1.0 {
        2.0 * alpha / (2.0 + alpha)
    } else {
        2.0 / (2.0 + alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlowFastRate {
    pub delta1: f64,
    pub rate: f64,
    /// `(½−κ)(α ∧ 1/α)`.
    pub lower_bound: f64,
}

/// `R = (½−κ)(1∧α)/((1∧α)+δ₁)` with
/// `δ₁ = [(α/2−β₁)∨(2−3α/2−β₁)+ι]∨0`.
///
/// `R ≥ (½−κ)(α ∧ 1/α)` always holds; the two coincide at `α = 1`.
pub fn slow_fast_rate(alpha: f64, beta1: f64, kappa: f64, iota: f64) -> Result<SlowFastRate> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::param(format!("alpha must lie in (0, 2), got {alpha}")));
    }
    if !(beta1 > 1.0 - alpha / 2.0 && beta1 < 1.0) {
        return Err(Error::param(format!("beta1 = {beta1} outside (1 − α/2, 1)")));
    }
    if !(kappa > 0.0 && kappa < 0.5) {
        return Err(Error::param("kappa must lie in (0, 1/2)"));
    }
    let iota_max = beta1 - 1.0 + alpha / 2.0;
    if !(iota > 0.0 && iota < iota_max) {
        return Err(Error::param(format!("iota = {iota} outside (0, {iota_max})")));
    }
    let delta1 = ((alpha / 2.0 - beta1).max(2.0 - 1.5 * alpha - beta1) + iota).max(0.0);
    let m = alpha.min(1.0);
    let rate = (0.5 - kappa) * m / (m + delta1);
    let lower_bound = (0.5 - kappa) * alpha.min(1.0 / alpha);
    debug_assert!(rate >= lower_bound * (1.0 - 1e-12));
    Ok(SlowFastRate {
        delta1,
        rate,
        lower_bound,
    })
}

const GL_DEGREE: usize = 16;
const MAX_PANELS: usize = 1 << 14;

fn legendre() -> GaussLegendre {
    GaussLegendre::new(NonZeroUsize::new(GL_DEGREE).unwrap())
}

/// Composite Gauss–Legendre with panel doubling until successive estimates
/// agree to `tol·(1 + |I|)`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let rule = legendre();
    let composite = |panels: usize| {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|i| rule.integrate(a + i as f64 * h, a + (i + 1) as f64 * h, &f))
            .sum::<f64>()
    };
    let mut panels = ((b - a).abs() / std::f64::consts::PI).ceil().max(1.0) as usize;
    let mut prev = composite(panels);
    while panels < MAX_PANELS {
        panels *= 2;
        let next = composite(panels);
        if (next - prev).abs() <= tol * (1.0 + next.abs()) {
            return next;
        }
        prev = next;
    }
    prev
}

const AVG_TOL: f64 = 1e-13;

/// `(1/T)∫₀^T field(s, x) ds`.
pub fn time_average(field: &Field, x: &[f64], horizon: f64) -> f64 {
    integrate(|s| field.eval_tx(s, x), 0.0, horizon, AVG_TOL) / horizon
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftAverage {
    /// `values[i][c]`: component `c` of `b̄` at point `i`.
    pub values: Vec<Vec<f64>>,
    /// `sup_x |(1/T)∫ − b̄_exact|` when an exact mean is supplied.
    pub remainder: Option<f64>,
    /// `sup_x |A(2^{k+1}T) − A(2^k T)|` for `k = 0, 1, 2` (empty when the
    /// average is exact by structure).
    pub doubling_gaps: Vec<f64>,
}

/// Period mean for periodic drifts, `b` itself for autonomous ones, and the
/// finite-horizon average at `t_avg` otherwise. Non-periodic averages must
/// settle along `t_avg, 2t_avg, 4t_avg, 8t_avg`, else [`Error::NoKbm`].
pub fn average_drift(
    b: &CoefficientSpec,
    t_avg: f64,
    points: &[Vec<f64>],
    exact: Option<&[Field]>,
) -> Result<DriftAverage> {
    if !(t_avg > 0.0) {
        return Err(Error::param("averaging horizon must be positive"));
    }
    if let Some(e) = exact {
        if e.len() != b.dim() {
            return Err(Error::Shape("exact mean has the wrong number of components".into()));
        }
    }
    if points.iter().any(|p| p.len() != b.dim()) {
        return Err(Error::Shape("averaging points have the wrong dimension".into()));
    }
    let average_at = |horizon: f64| -> Vec<Vec<f64>> {
        points
            .iter()
            .map(|x| b.drift().iter().map(|f| time_average(f, x, horizon)).collect())
            .collect()
    };
    let sup_gap = |a: &[Vec<f64>], c: &[Vec<f64>]| {
        a.iter()
            .flatten()
            .zip(c.iter().flatten())
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max)
    };
    let (values, doubling_gaps) = if b.is_autonomous() {
        let v = points
            .iter()
            .map(|x| b.drift().iter().map(|f| f.eval_tx(0.0, x)).collect())
            .collect();
        (v, Vec::new())
    } else if let TimeStructure::Periodic(period) = b.time_structure() {
        (average_at(*period), Vec::new())
    } else {
        let ladder: Vec<Vec<Vec<f64>>> = (0..4).map(|k| average_at(t_avg * (1 << k) as f64)).collect();
        let gaps: Vec<f64> = ladder.windows(2).map(|w| sup_gap(&w[0], &w[1])).collect();
        if gaps[2] > 1e-10 && gaps[2] >= gaps[0] {
            return Err(Error::NoKbm(format!(
                "time averages move by {:.3e} then {:.3e} over doubled horizons",
                gaps[0], gaps[2]
            )));
        }
        (ladder.into_iter().next().unwrap(), gaps)
    };
    let remainder = exact.map(|e| {
        let want: Vec<Vec<f64>> = points
            .iter()
            .map(|x| e.iter().map(|f| f.eval_tx(0.0, x)).collect())
            .collect();
        sup_gap(&values, &want)
    });
    Ok(DriftAverage {
        values,
        remainder,
        doubling_gaps,
    })
}

fn grid_x(grid: PeriodicGrid, i: usize, d: usize) -> Vec<f64> {
    grid.point(i)[..d].to_vec()
}

fn check_grid(grid: PeriodicGrid, d: usize) -> Result<()> {
    if grid.dim() != d {
        return Err(Error::Shape(format!(
            "grid dimension {} differs from coefficient dimension {d}",
            grid.dim()
        )));
    }
    Ok(())
}

/// `‖(1/T)∫₀^T b(s,·)ds − b̄‖_{C^γ}` on `grid`, maximized over components.
pub fn ell1(b: &CoefficientSpec, b_bar: &[Field], horizon: f64, gamma: f64, grid: PeriodicGrid) -> Result<f64> {
    if !(horizon > 0.0) {
        return Err(Error::param("horizon must be positive"));
    }
    let d = b.dim();
    check_grid(grid, d)?;
    if b_bar.len() != d {
        return Err(Error::Shape("averaged drift has the wrong number of components".into()));
    }
    let mut worst: f64 = 0.0;
    for (f, fbar) in b.drift().iter().zip(b_bar) {
        let values = (0..grid.len())
            .map(|i| {
                let x = grid_x(grid, i, d);
                time_average(f, &x, horizon) - fbar.eval_tx(0.0, &x)
            })
            .collect();
        let g = GridFunction::new(grid, values)?;
        worst = worst.max(besov::c_norm(&g, gamma)?);
    }
    Ok(worst)
}

/// `‖(1/T)∫₀^T |σ(s,·) − σ̄|² ds‖_{C¹}` on `grid` with the Frobenius norm;
/// the `C¹` norm is the sup plus the sup of centred-difference gradients.
pub fn ell2(sigma: &CoefficientSpec, sigma_bar: &CoefficientSpec, horizon: f64, grid: PeriodicGrid) -> Result<f64> {
    if !(horizon > 0.0) {
        return Err(Error::param("horizon must be positive"));
    }
    let d = sigma.dim();
    check_grid(grid, d)?;
    if sigma_bar.dim() != d {
        return Err(Error::Shape("averaged diffusion has the wrong dimension".into()));
    }
    let values: Vec<f64> = (0..grid.len())
        .map(|i| {
            let x = grid_x(grid, i, d);
            let mut bar = vec![0.0; d * d];
            sigma_bar.eval_diffusion(0.0, &x, &mut bar);
            let integrand = |t: f64| {
                let mut s = vec![0.0; d * d];
                sigma.eval_diffusion(t, &x, &mut s);
                s.iter().zip(&bar).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
            };
            integrate(integrand, 0.0, horizon, AVG_TOL) / horizon
        })
        .collect();
    let h = GridFunction::new(grid, values)?;
    let n = grid.n_points();
    let dx = grid.spacing();
    let mut grad: f64 = 0.0;
    for axis in 0..d {
        let step = match (d, axis) {
            (1, _) | (_, 1) => [1, 0],
            _ => [0, 1],
        };
        let fwd = h.shift([(n - step[0]) % n, (n - step[1]) % n]);
        let bwd = h.shift(step);
        for (a, b) in fwd.values().iter().zip(bwd.values()) {
            grad = grad.max((a - b).abs() / (2.0 * dx));
        }
    }
    Ok(h.sup_norm() + grad)
}

/// Stationary variance `1/(2a)` of `dY = −aY dt + dW`.
pub fn ou_stationary_variance(a: f64) -> f64 {
    1.0 / (2.0 * a)
}

/// `f̄(x) = E g(x, Y)` with `Y ~ N(0, I_m/(2a))`, the invariant law of the
/// fast process for `B(y) = −a·y`, by tensor Gauss–Hermite quadrature.
pub fn gaussian_fast_average(integrand: &Expr, a: f64, m: usize, order: usize) -> Result<Field> {
    if !(a > 0.0) {
        return Err(Error::param("fast drift rate must be positive"));
    }
    if !(1..=3).contains(&m) || order == 0 {
        return Err(Error::param("need fast dimension 1..=3 and a positive order"));
    }
    let rule = GaussHermite::new(NonZeroUsize::new(order).unwrap());
    let pairs = rule.as_node_weight_pairs();
    let scale = 1.0 / a.sqrt();
    let norm = std::f64::consts::PI.powf(-(m as f64) / 2.0);
    let total = order.pow(m as u32);
    let mut nodes = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    for idx in 0..total {
        let mut node = [0.0; 3];
        let mut w = norm;
        let mut r = idx;
        for slot in node.iter_mut().take(m) {
            let (z, wz) = pairs[r % order];
            *slot = scale * z;
            w *= wz;
            r /= order;
        }
        nodes.push(node);
        weights.push(w);
    }
    Ok(Field::FastAverage {
        integrand: integrand.clone(),
        nodes,
        weights,
    })
}
