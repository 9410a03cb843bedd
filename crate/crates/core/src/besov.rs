//! Littlewood–Paley analysis on the periodic grid: dyadic blocks, Besov
//! `B^s_{∞,∞}` and Hölder norms, mollification and the fractional Laplacian.
//!
//! The cut-off `χ` is radial, equal to 1 on `|ξ| ≤ 1` and to 0 on
//! `|ξ| ≥ 3/2`, with the smooth transition
//! `ψ(t) = e^{-1/(1-t)} / (e^{-1/(1-t)} + e^{-1/t})`, `χ(ξ) = ψ(2(|ξ| - 1))`.
//! With `φ(ξ) = χ(ξ) − χ(2ξ)` the blocks are
//! `ℛ_{-1} f = F⁻¹[χ(2·) F f]` and `ℛ_j f = F⁻¹[φ(2^{-j}·) F f]`, `j ≥ 0`,
//! so block `j` lives on `2^{j-1} ≤ |ξ| ≤ 3·2^{j-1}`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{self, GridFunction, PeriodicGrid};
use crate::stats;

/// Grids with at most this many points get the exhaustive pair scan.
const HOLDER_EXHAUSTIVE_MAX: usize = 512;
const HOLDER_SAMPLED_PAIRS: usize = 200_000;
const HOLDER_SEED: u64 = 0x5eed_b0de;

fn transition(t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let a = (-1.0 / (1.0 - t)).exp();
        let b = (-1.0 / t).exp();
        a / (a + b)
    }
}

/// Radial cut-off `χ(|ξ|)`.
pub fn chi(r: f64) -> f64 {
    transition((r - 1.0) / 0.5)
}

/// Annulus profile `φ(|ξ|) = χ(|ξ|) − χ(2|ξ|)`.
pub fn phi(r: f64) -> f64 {
    chi(r) - chi(2.0 * r)
}

/// Multiplier of block `j` at radius `r`.
pub fn block_multiplier(j: i32, r: f64) -> f64 {
    if j < 0 {
        chi(2.0 * r)
    } else {
        phi(r / 2f64.powi(j))
    }
}

/// Index of the last block needed to reconstruct every mode on `grid`.
pub fn natural_j_max(grid: PeriodicGrid) -> i32 {
    // smallest J with 2^J ≥ max |ξ|, so χ(2^{-J}ξ) = 1 on the whole grid
    let r = grid.max_frequency();
    let mut j = 0;
    while 2f64.powi(j) < r - 1e-9 {
        j += 1;
    }
    j
}

#[derive(Debug, Clone)]
pub struct DyadicDecomposition {
    grid: PeriodicGrid,
    blocks: Vec<GridFunction>,
}

impl DyadicDecomposition {
    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    pub fn j_max(&self) -> i32 {
        self.blocks.len() as i32 - 2
    }

    /// Block `ℛ_j f`, `j ≥ -1`.
    pub fn block(&self, j: i32) -> &GridFunction {
        &self.blocks[(j + 1) as usize]
    }

    /// `(j, ℛ_j f)` pairs in increasing `j`.
    pub fn iter(&self) -> impl Iterator<Item = (i32, &GridFunction)> {
        self.blocks.iter().enumerate().map(|(i, b)| (i as i32 - 1, b))
    }

    pub fn reconstruct(&self) -> GridFunction {
        let mut acc = GridFunction::zeros(self.grid);
        for b in &self.blocks {
            for (a, v) in acc.values_mut().iter_mut().zip(b.values()) {
                *a += v;
            }
        }
        acc
    }
}

/// Full dyadic decomposition of `f` (blocks `-1 ..= natural_j_max`).
pub fn littlewood_paley(f: &GridFunction) -> DyadicDecomposition {
    let j_max = natural_j_max(f.grid());
    decompose(f, j_max)
}

/// Decomposition truncated at `j_max`. Errors when block `j_max` would sit
/// entirely above the grid's highest frequency.
pub fn littlewood_paley_levels(f: &GridFunction, j_max: i32) -> Result<DyadicDecomposition> {
    if j_max < -1 {
        return Err(Error::param("j_max must be at least -1"));
    }
    let natural = natural_j_max(f.grid());
    if j_max > natural {
        return Err(Error::Resolution(format!(
            "block {j_max} needs frequencies up to {}, grid resolves {}",
            3.0 * 2f64.powi(j_max - 1),
            f.grid().max_frequency()
        )));
    }
    Ok(decompose(f, j_max))
}

fn decompose(f: &GridFunction, j_max: i32) -> DyadicDecomposition {
    let grid = f.grid();
    let coeffs = spectral::forward(f);
    let radii: Vec<f64> = (0..grid.len()).map(|i| grid.frequency_norm(i)).collect();
    let blocks = (-1..=j_max)
        .map(|j| {
            let c: Vec<_> = coeffs
                .iter()
                .zip(&radii)
                .map(|(c, &r)| c * block_multiplier(j, r))
                .collect();
            spectral::inverse(grid, c)
        })
        .collect();
    DyadicDecomposition { grid, blocks }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BesovNormResult {
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub value: f64,
    /// `2^{js} ‖ℛ_j f‖_∞` for `j = -1, 0, …`.
    pub per_block: Vec<f64>,
}

/// `‖f‖_{B^s_{∞,∞}} = sup_j 2^{js} ‖ℛ_j f‖_∞`.
pub fn besov_norm(decomp: &DyadicDecomposition, s: f64) -> BesovNormResult {
    let per_block: Vec<f64> = decomp
        .iter()
        .map(|(j, b)| 2f64.powf(j as f64 * s) * b.sup_norm())
        .collect();
    let value = per_block.iter().copied().fold(0.0, f64::max);
    BesovNormResult {
        s,
        p: f64::INFINITY,
        q: f64::INFINITY,
        value,
        per_block,
    }
}

/// Shorthand for `besov_norm(&littlewood_paley(f), s).value`.
pub fn besov(f: &GridFunction, s: f64) -> f64 {
    besov_norm(&littlewood_paley(f), s).value
}

/// `‖f‖_∞ + sup_{x≠y} |f(x) − f(y)| / d(x, y)^β` with `d` the torus metric.
///
/// Grids of at most 512 points are scanned exhaustively; larger grids use a
/// fixed stratified sample of 2·10⁵ pairs (strata are dyadic bands of the
/// index offset, so short and long separations are both represented).
pub fn holder_norm(f: &GridFunction, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::param(format!("Hölder exponent must lie in (0, 1], got {beta}")));
    }
    let grid = f.grid();
    let v = f.values();
    let quotient = |i: usize, j: usize| {
        let d = grid.torus_distance(i, j);
        (v[i] - v[j]).abs() / d.powf(beta)
    };
    let mut best: f64 = 0.0;
    if grid.len() <= HOLDER_EXHAUSTIVE_MAX {
        for i in 0..grid.len() {
            for j in i + 1..grid.len() {
                best = best.max(quotient(i, j));
            }
        }
    } else {
        let n = grid.n_points();
        let half = n / 2;
        let bands = half.trailing_zeros() as usize + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(HOLDER_SEED);
        for s in 0..HOLDER_SAMPLED_PAIRS {
            let band = s % bands;
            let lo = 1usize << band;
            let hi = (lo << 1).min(half + 1);
            let i = rng.random_range(0..grid.len());
            let j = match grid.dim() {
                1 => (i + rng.random_range(lo..hi)) % n,
                _ => {
                    let [a, b] = grid.axis_indices(i);
                    let da = rng.random_range(0..hi);
                    let db = if da < lo { rng.random_range(lo..hi) } else { rng.random_range(0..hi) };
                    ((a + da) % n) * n + (b + db) % n
                }
            };
            if i != j {
                best = best.max(quotient(i, j));
            }
        }
    }
    Ok(f.sup_norm() + best)
}

/// `C^γ` norm: Hölder for `γ ∈ (0, 1]`, Besov `B^γ_{∞,∞}` for `γ ≤ 0`.
pub fn c_norm(f: &GridFunction, gamma: f64) -> Result<f64> {
    if gamma > 0.0 {
        holder_norm(f, gamma)
    } else {
        Ok(besov(f, gamma))
    }
}

/// Gaussian mollifier `ρ_n(x) = n^d ρ(nx)` with `ρ` the standard normal
/// density, periodized on the torus; `ρ̂_n(ξ) = exp(-|ξ|²/(2n²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    n: f64,
}

impl Mollifier {
    pub fn new(n: f64) -> Result<Self> {
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::param(format!("mollifier index must be positive, got {n}")));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn symbol(&self, xi: [f64; 2]) -> f64 {
        let r2 = xi[0] * xi[0] + xi[1] * xi[1];
        (-r2 / (2.0 * self.n * self.n)).exp()
    }

    /// Periodized kernel sampled on the grid (centred at the origin).
    pub fn kernel_on_grid(&self, grid: PeriodicGrid) -> GridFunction {
        let p = grid.period();
        let d = grid.dim() as i32;
        let n = self.n;
        let norm = (n / (2.0 * std::f64::consts::PI).sqrt()).powi(d);
        let images = (6.0 / (n * p)).ceil() as i32 + 1;
        GridFunction::from_fn(grid, |x| {
            let axis = |c: f64| -> f64 {
                (-images..=images)
                    .map(|m| {
                        let y = n * (c + m as f64 * p);
                        (-0.5 * y * y).exp()
                    })
                    .sum()
            };
            let mut v = norm * axis(x[0]);
            if d == 2 {
                v *= axis(x[1]);
            }
            v
        })
    }
}

/// `f_n = f * ρ_n` via Fourier multiplication.
pub fn mollify(f: &GridFunction, mol: &Mollifier) -> GridFunction {
    spectral::apply_multiplier(f, |xi| mol.symbol(xi))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MollifierSlopeReport {
    pub kappa: f64,
    pub delta: f64,
    pub n_list: Vec<f64>,
    /// `‖f_n‖_{B^{κ+δ}}` per `n`.
    pub growth_norms: Vec<f64>,
    /// `‖f_n − f‖_{B^κ}` per `n`.
    pub decay_norms: Vec<f64>,
    pub growth_slope: f64,
    pub decay_slope: f64,
}

/// Log-log slopes of the mollifier growth `‖f_n‖_{B^{κ+δ}}` and decay
/// `‖f_n − f‖_{B^κ}` along a geometric ladder of `n`.
pub fn mollifier_rate_check(
    f: &GridFunction,
    kappa: f64,
    delta: f64,
    n_list: &[f64],
) -> Result<MollifierSlopeReport> {
    if n_list.len() < 5 {
        return Err(Error::param(format!("n ladder needs at least 5 entries, got {}", n_list.len())));
    }
    if n_list.iter().any(|&n| !(n > 0.0)) {
        return Err(Error::param("n ladder entries must be positive"));
    }
    let ratio = n_list[1] / n_list[0];
    if !(ratio > 1.0) || n_list.windows(2).any(|w| ((w[1] / w[0]) / ratio - 1.0).abs() > 1e-9) {
        return Err(Error::param("n ladder must be increasing and geometric"));
    }
    if !(delta >= 0.0) {
        return Err(Error::param("delta must be nonnegative"));
    }
    let mut growth_norms = Vec::with_capacity(n_list.len());
    let mut decay_norms = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let fn_ = mollify(f, &Mollifier::new(n)?);
        growth_norms.push(besov(&fn_, kappa + delta));
        decay_norms.push(besov(&fn_.sub(f)?, kappa));
    }
    if growth_norms.iter().all(|&v| v < 1e-12) {
        return Err(Error::Degenerate("all mollified norms vanish".into()));
    }
    let floor = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| x.max(1e-300)).collect() };
    let growth = stats::log_log_fit(n_list, &floor(&growth_norms))?;
    let decay = stats::log_log_fit(n_list, &floor(&decay_norms))?;
    Ok(MollifierSlopeReport {
        kappa,
        delta,
        n_list: n_list.to_vec(),
        growth_norms,
        decay_norms,
        growth_slope: growth.slope,
        decay_slope: decay.slope,
    })
}

/// `(−Δ)^{α/2} f`: Fourier coefficient `k` multiplied by `|k|^α`.
pub fn frac_laplacian(f: &GridFunction, alpha: f64) -> Result<GridFunction> {
    frac_laplacian_scaled(f, alpha, 1.0)
}

/// Symbol `(c|k|)^α`, the generator for `σ = cI`.
pub fn frac_laplacian_scaled(f: &GridFunction, alpha: f64, c: f64) -> Result<GridFunction> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::param(format!("fractional order must lie in (0, 2), got {alpha}")));
    }
    if !(c > 0.0) {
        return Err(Error::param("diffusion coefficient must be positive"));
    }
    Ok(spectral::apply_multiplier(f, |xi| (c * xi[0].hypot(xi[1])).powf(alpha)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn circle(n: usize) -> PeriodicGrid {
        PeriodicGrid::circle(n).unwrap()
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(chi(0.3), 1.0);
        assert_eq!(chi(1.0), 1.0);
        assert_eq!(chi(1.5), 0.0);
        assert!(chi(1.25) > 0.0 && chi(1.25) < 1.0);
        assert!((chi(1.25) - 0.5).abs() < 1e-12);
        for r in [0.1, 0.5, 0.9, 1.2, 1.7] {
            assert!(phi(r) >= 0.0);
        }
        assert_eq!(phi(0.4), 0.0);
    }

    #[test]
    fn constant_lives_in_low_block() {
        let f = GridFunction::constant(circle(32), 1.0);
        let d = littlewood_paley(&f);
        assert!((d.block(-1).values()[3] - 1.0).abs() < 1e-12);
        for j in 0..=d.j_max() {
            assert!(d.block(j).sup_norm() < 1e-12);
        }
        assert!((besov_norm(&d, 0.0).value - 1.0).abs() < 1e-12);
        assert!((besov_norm(&d, 1.0).value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn j_max_matches_grid() {
        assert_eq!(natural_j_max(circle(64)), 5);
        let g2 = PeriodicGrid::new(2, 2.0 * PI, 32).unwrap();
        assert_eq!(natural_j_max(g2), 5);
        let f = GridFunction::constant(circle(64), 1.0);
        assert!(littlewood_paley_levels(&f, 6).is_err());
        assert_eq!(littlewood_paley_levels(&f, 3).unwrap().j_max(), 3);
    }

    #[test]
    fn cosine_single_block() {
        let f = GridFunction::from_fn(circle(64), |x| x[0].cos());
        let d = littlewood_paley(&f);
        assert!(d.block(0).sub(&f).unwrap().sup_norm() < 1e-12);
        assert!(d.reconstruct().sub(&f).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn frac_laplacian_symbol() {
        let g = circle(64);
        let f = GridFunction::from_fn(g, |x| (2.0 * x[0]).cos());
        let lf = frac_laplacian(&f, 1.5).unwrap();
        assert!(lf.sub(&f.scale(2f64.powf(1.5))).unwrap().sup_norm() < 1e-12);
        let one = GridFunction::constant(g, 1.0);
        assert!(frac_laplacian(&one, 0.7).unwrap().sup_norm() < 1e-12);
        let c1 = GridFunction::from_fn(g, |x| x[0].cos());
        for a in [0.3, 1.0, 1.9] {
            assert!(frac_laplacian(&c1, a).unwrap().sub(&c1).unwrap().sup_norm() < 1e-12);
        }
        assert!(frac_laplacian(&c1, 2.0).is_err());
    }

    #[test]
    fn holder_of_constant_and_bad_beta() {
        let f = GridFunction::constant(circle(64), -3.0);
        assert_eq!(holder_norm(&f, 0.5).unwrap(), 3.0);
        assert!(holder_norm(&f, 0.0).is_err());
        assert!(holder_norm(&f, 1.5).is_err());
    }

    #[test]
    fn mollifier_mass_and_constants() {
        // the sampled kernel integrates exactly once it is resolved by the grid
        let g = circle(512);
        for n in [1.0, 4.0, 16.0, 64.0] {
            let k = Mollifier::new(n).unwrap().kernel_on_grid(g);
            let mass = stats::pairwise_sum(k.values()) * g.spacing();
            assert!((mass - 1.0).abs() < 1e-10, "n={n}: mass {mass}");
            assert!(k.values().iter().all(|&v| v >= 0.0));
        }
        let c = GridFunction::constant(g, 2.5);
        let m = mollify(&c, &Mollifier::new(3.0).unwrap());
        assert!(m.sub(&c).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn mollifier_check_rejects_bad_input() {
        let g = circle(64);
        let zero = GridFunction::zeros(g);
        let ladder = [4.0, 8.0, 16.0, 32.0, 64.0];
        assert!(matches!(
            mollifier_rate_check(&zero, 0.3, 0.5, &ladder),
            Err(Error::Degenerate(_))
        ));
        let f = GridFunction::from_fn(g, |x| x[0].sin());
        assert!(mollifier_rate_check(&f, 0.3, 0.5, &ladder[..4]).is_err());
        assert!(mollifier_rate_check(&f, 0.3, 0.5, &[4.0, 8.0, 16.0, 30.0, 64.0]).is_err());
    }
}
