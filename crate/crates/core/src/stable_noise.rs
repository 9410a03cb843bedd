//! Exact-in-law increments of the rotationally invariant symmetric
//! α-stable process.
//!
//! The standard law has characteristic function `exp(-|ξ|^α)`. One-dimensional
//! draws use the Chambers–Mallows–Stuck transform; for `d ≥ 2` the isotropic
//! law is obtained by subordinating a Gaussian vector with a positive
//! `(α/2)`-stable random time.
//!
//! Randomness is counter based: step `k` of path `path_index` under master
//! `seed` always reads the same ChaCha block, so a path can be regenerated
//! without replaying other paths, and the output never depends on how work
//! is split across threads.

use std::f64::consts::PI;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// 32-bit words in one ChaCha block; every step owns exactly one block.
const WORDS_PER_STEP: u128 = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParams {
    alpha: f64,
    scale: f64,
}

impl StableParams {
    pub fn new(alpha: f64, scale: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::param(format!("scale must be positive, got {scale}")));
        }
        Ok(Self { alpha, scale })
    }

    pub fn standard(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// α = 2 is the Gaussian endpoint (variance 2 per component).
    pub fn is_gaussian_limit(&self) -> bool {
        self.alpha == 2.0
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::param(format!("stability index must lie in (0, 2], got {alpha}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_end > t0) || !t0.is_finite() || !t_end.is_finite() {
            return Err(Error::param(format!("time grid needs t_end > t0, got [{t0}, {t_end}]")));
        }
        if n_steps == 0 {
            return Err(Error::param("time grid needs at least one step"));
        }
        Ok(Self { t0, t_end, n_steps })
    }

    /// Grid on `[0, t_end]` with step at most `max_dt`.
    pub fn with_max_step(t_end: f64, max_dt: f64) -> Result<Self> {
        if !(max_dt > 0.0) {
            return Err(Error::param("max step must be positive"));
        }
        let n = (t_end / max_dt - 1e-9).ceil().max(1.0) as usize;
        Self::new(0.0, t_end, n)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t0) / self.n_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt()
    }

    /// Index of the grid node closest to `t`, if `t` is a node to within `tol·dt`.
    pub fn index_of(&self, t: f64, tol: f64) -> Option<usize> {
        let x = (t - self.t0) / self.dt();
        let k = x.round();
        if (x - k).abs() <= tol && k >= 0.0 && k as usize <= self.n_steps {
            Some(k as usize)
        } else {
            None
        }
    }
}

/// Counter-based random stream for one `(seed, path_index)` pair.
pub struct PathStream {
    rng: ChaCha8Rng,
}

impl PathStream {
    pub fn new(seed: u64, path_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path_index);
        Self { rng }
    }

    /// Positions the stream at the block reserved for `step` and returns it.
    pub fn at_step(&mut self, step: u64) -> &mut ChaCha8Rng {
        self.rng.set_word_pos(step as u128 * WORDS_PER_STEP);
        &mut self.rng
    }
}

/// Uniform on the open interval (0, 1).
pub(crate) fn open01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn uniform_angle<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    PI * (open01(rng) - 0.5)
}

fn std_exponential<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    -open01(rng).ln()
}

/// Two independent standard normals via Box–Muller (fixed draw count).
pub(crate) fn normal_pair<R: RngCore + ?Sized>(rng: &mut R) -> (f64, f64) {
    let r = (-2.0 * open01(rng).ln()).sqrt();
    let theta = 2.0 * PI * open01(rng);
    (r * theta.cos(), r * theta.sin())
}

/// CMS map for the symmetric law, `u ∈ (-π/2, π/2)`, `e > 0`.
fn cms_symmetric(alpha: f64, u: f64, e: f64) -> f64 {
    if alpha == 1.0 {
        return u.tan();
    }
    if alpha == 2.0 {
        return 2.0 * u.sin() * e.sqrt();
    }
    let a = alpha;
    (a * u).sin() / u.cos().powf(1.0 / a) * ((((1.0 - a) * u).cos()) / e).powf((1.0 - a) / a)
}

/// One draw of the standard symmetric α-stable law, `E e^{iξX} = exp(-|ξ|^α)`.
pub fn sample_standard_stable<R: RngCore + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    check_alpha(alpha)?;
    let u = uniform_angle(rng);
    let e = std_exponential(rng);
    Ok(cms_symmetric(alpha, u, e))
}

/// One draw of the totally skewed positive stable law with Laplace transform
/// `E e^{-sA} = exp(-s^a)`, `a ∈ (0, 1]`.
///
/// Kanter's form of the one-sided CMS transform: with `V` uniform on (0, 1)
/// and `E` standard exponential,
/// `A = sin(aπV) / sin(πV)^{1/a} · (sin((1-a)πV) / E)^{(1-a)/a}`.
/// `a = 1` is the degenerate law at 1.
pub fn sample_positive_stable<R: RngCore + ?Sized>(a: f64, rng: &mut R) -> Result<f64> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::param(format!("positive stable index must lie in (0, 1], got {a}")));
    }
    let v = open01(rng);
    let e = std_exponential(rng);
    Ok(kanter(a, v, e))
}

fn kanter(a: f64, v: f64, e: f64) -> f64 {
    if a == 1.0 {
        return 1.0;
    }
    (a * PI * v).sin() / (PI * v).sin().powf(1.0 / a)
        * (((1.0 - a) * PI * v).sin() / e).powf((1.0 - a) / a)
}

/// Fills `out` with one standard isotropic draw in `out.len()` dimensions.
///
/// `d = 1` uses CMS directly. For `d ≥ 2`, `X = sqrt(A) G` with
/// `A ~ positive (α/2)-stable` and `G ~ N(0, 2I)`, because
/// `E exp(iξ·sqrt(A)G) = E exp(-A|ξ|²) = exp(-|ξ|^α)`.
fn standard_isotropic<R: RngCore + ?Sized>(alpha: f64, rng: &mut R, out: &mut [f64]) {
    if out.len() == 1 {
        let u = uniform_angle(rng);
        let e = std_exponential(rng);
        out[0] = cms_symmetric(alpha, u, e);
        return;
    }
    let v = open01(rng);
    let e = std_exponential(rng);
    let amp = (2.0 * kanter(alpha / 2.0, v, e)).sqrt();
    for pair in out.chunks_mut(2) {
        let (g0, g1) = normal_pair(rng);
        pair[0] = amp * g0;
        if pair.len() == 2 {
            pair[1] = amp * g1;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StablePathIncrements {
    params: StableParams,
    grid: TimeGrid,
    dim: usize,
    increments: Vec<f64>,
    seed: u64,
    path_index: u64,
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if (1..=3).contains(&dim) {
        Ok(())
    } else {
        Err(Error::param(format!("dimension must be 1, 2 or 3, got {dim}")))
    }
}

/// Samples `grid.n_steps()` i.i.d. increments `ΔL_k ~ dt^{1/α}·scale·S`.
pub fn sample_increments(
    params: StableParams,
    grid: TimeGrid,
    dim: usize,
    seed: u64,
    path_index: u64,
) -> Result<StablePathIncrements> {
    check_dim(dim)?;
    let factor = grid.dt().powf(1.0 / params.alpha) * params.scale;
    let mut stream = PathStream::new(seed, path_index);
    let mut increments = vec![0.0; grid.n_steps() * dim];
    for (k, row) in increments.chunks_mut(dim).enumerate() {
        standard_isotropic(params.alpha, stream.at_step(k as u64), row);
        row.iter_mut().for_each(|v| *v *= factor);
    }
    Ok(StablePathIncrements {
        params,
        grid,
        dim,
        increments,
        seed,
        path_index,
    })
}

/// Standard normal increments of a Brownian motion (one row of `dim` values
/// per step, unscaled), keyed the same way as the stable stream.
pub fn sample_gaussian_steps(n_steps: usize, dim: usize, seed: u64, path_index: u64) -> Vec<f64> {
    let mut stream = PathStream::new(seed, path_index);
    let mut out = vec![0.0; n_steps * dim];
    for (k, row) in out.chunks_mut(dim).enumerate() {
        let rng = stream.at_step(k as u64);
        for pair in row.chunks_mut(2) {
            let (a, b) = normal_pair(rng);
            pair[0] = a;
            if pair.len() == 2 {
                pair[1] = b;
            }
        }
    }
    out
}

impl StablePathIncrements {
    /// Assembles increments from raw parts, e.g. after reading a dump.
    pub fn from_parts(
        params: StableParams,
        grid: TimeGrid,
        dim: usize,
        increments: Vec<f64>,
        seed: u64,
        path_index: u64,
    ) -> Result<Self> {
        check_dim(dim)?;
        if increments.len() != grid.n_steps() * dim {
            return Err(Error::Shape(format!(
                "expected {} increments, got {}",
                grid.n_steps() * dim,
                increments.len()
            )));
        }
        Ok(Self {
            params,
            grid,
            dim,
            increments,
            seed,
            path_index,
        })
    }

    pub fn params(&self) -> StableParams {
        self.params
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.increments
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.increments[k * self.dim..(k + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.increments.chunks(self.dim)
    }

    /// Sums blocks of `factor` consecutive increments. By stability the
    /// result is an exact draw on the coarser grid sharing this realization.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.grid.n_steps() % factor != 0 {
            return Err(Error::param(format!(
                "coarsening factor {factor} does not divide {} steps",
                self.grid.n_steps()
            )));
        }
        let grid = TimeGrid::new(self.grid.t0(), self.grid.t_end(), self.grid.n_steps() / factor)?;
        let d = self.dim;
        let mut increments = vec![0.0; grid.n_steps() * d];
        for (k, row) in increments.chunks_mut(d).enumerate() {
            for fine in k * factor..(k + 1) * factor {
                for (acc, v) in row.iter_mut().zip(self.row(fine)) {
                    *acc += v;
                }
            }
        }
        Ok(Self { grid, increments, ..self.clone() })
    }

    /// FNV-1a over the raw bit patterns.
    pub fn checksum(&self) -> u64 {
        checksum_f64(&self.increments)
    }
}

pub(crate) fn checksum_f64(values: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}
