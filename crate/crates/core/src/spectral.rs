//! Periodic grids, grid functions and FFT-based Fourier multipliers.

use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    dim: usize,
    period: f64,
    n_points: usize,
}

impl PeriodicGrid {
    pub fn new(dim: usize, period: f64, n_points: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::param(format!("periodic grids support dim 1 or 2, got {dim}")));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::param(format!("period must be positive, got {period}")));
        }
        if n_points < 16 || !n_points.is_power_of_two() {
            return Err(Error::param(format!(
                "n_points must be a power of two >= 16, got {n_points}"
            )));
        }
        Ok(Self { dim, period, n_points })
    }

    /// One-dimensional grid on `[0, 2π)`.
    pub fn circle(n_points: usize) -> Result<Self> {
        Self::new(1, 2.0 * PI, n_points)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Total number of samples, `n_points^dim`.
    pub fn len(&self) -> usize {
        self.n_points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n_points as f64
    }

    /// Axis indices of flat index `i` (row-major, last axis fastest).
    pub fn axis_indices(&self, i: usize) -> [usize; 2] {
        match self.dim {
            1 => [i, 0],
            _ => [i / self.n_points, i % self.n_points],
        }
    }

    pub fn point(&self, i: usize) -> [f64; 2] {
        let h = self.spacing();
        let [a, b] = self.axis_indices(i);
        match self.dim {
            1 => [a as f64 * h, 0.0],
            _ => [a as f64 * h, b as f64 * h],
        }
    }

    fn signed_mode(&self, idx: usize) -> f64 {
        let n = self.n_points;
        if idx <= n / 2 {
            idx as f64
        } else {
            idx as f64 - n as f64
        }
    }

    /// Angular frequency vector of DFT coefficient `i`.
    pub fn wavevector(&self, i: usize) -> [f64; 2] {
        let w = 2.0 * PI / self.period;
        let [a, b] = self.axis_indices(i);
        match self.dim {
            1 => [w * self.signed_mode(a), 0.0],
            _ => [w * self.signed_mode(a), w * self.signed_mode(b)],
        }
    }

    pub fn frequency_norm(&self, i: usize) -> f64 {
        let [a, b] = self.wavevector(i);
        a.hypot(b)
    }

    /// Largest `|ξ|` represented on the grid.
    pub fn max_frequency(&self) -> f64 {
        let nyq = (self.n_points / 2) as f64 * 2.0 * PI / self.period;
        nyq * (self.dim as f64).sqrt()
    }

    /// Distance on the torus between flat indices `i` and `j`.
    pub fn torus_distance(&self, i: usize, j: usize) -> f64 {
        let n = self.n_points;
        let h = self.spacing();
        let ai = self.axis_indices(i);
        let aj = self.axis_indices(j);
        let mut s = 0.0;
        for ax in 0..self.dim {
            let d = ai[ax].abs_diff(aj[ax]);
            let d = d.min(n - d) as f64 * h;
            s += d * d;
        }
        s.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "grid holds {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: PeriodicGrid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self { grid, values }
    }

    pub fn constant(grid: PeriodicGrid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        crate::stats::pairwise_sum(&self.values) / self.values.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::Shape("grid functions live on different grids".into()));
        }
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// Cyclic shift by whole grid cells along each axis.
    pub fn shift(&self, cells: [usize; 2]) -> Self {
        let n = self.grid.n_points;
        let mut values = vec![0.0; self.values.len()];
        for (i, v) in values.iter_mut().enumerate() {
            let [a, b] = self.grid.axis_indices(i);
            let src = match self.grid.dim {
                1 => (a + n - cells[0] % n) % n,
                _ => ((a + n - cells[0] % n) % n) * n + (b + n - cells[1] % n) % n,
            };
            *v = self.values[src];
        }
        Self { grid: self.grid, values }
    }

    /// Discrete inner product `Σ f g · dx^d`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        let prod = self.zip_with(other, |a, b| a * b)?;
        Ok(crate::stats::pairwise_sum(&prod.values) * self.grid.spacing().powi(self.grid.dim as i32))
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_lines(data: &mut [Complex64], n: usize, inverse: bool) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        let plan = if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        };
        plan.process(data);
    });
}

fn fft_nd(grid: PeriodicGrid, data: &mut [Complex64], inverse: bool) {
    let n = grid.n_points;
    fft_lines(data, n, inverse);
    if grid.dim == 2 {
        let mut col = vec![Complex64::new(0.0, 0.0); n * n];
        for r in 0..n {
            for c in 0..n {
                col[c * n + r] = data[r * n + c];
            }
        }
        fft_lines(&mut col, n, inverse);
        for r in 0..n {
            for c in 0..n {
                data[r * n + c] = col[c * n + r];
            }
        }
    }
}

/// Unnormalized DFT coefficients of a grid function.
pub fn forward(f: &GridFunction) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(f.grid, &mut data, false);
    data
}

/// Inverse of [`forward`]; the imaginary part is discarded.
pub fn inverse(grid: PeriodicGrid, mut coeffs: Vec<Complex64>) -> GridFunction {
    fft_nd(grid, &mut coeffs, true);
    let scale = 1.0 / grid.len() as f64;
    GridFunction {
        grid,
        values: coeffs.into_iter().map(|c| c.re * scale).collect(),
    }
}

/// Applies a real radial-or-not Fourier multiplier `m(ξ)`.
pub fn apply_multiplier(f: &GridFunction, m: impl Fn([f64; 2]) -> f64) -> GridFunction {
    let grid = f.grid;
    let mut c = forward(f);
    for (i, v) in c.iter_mut().enumerate() {
        *v *= m(grid.wavevector(i));
    }
    inverse(grid, c)
}

/// Spectral partial derivative along `axis`. The Nyquist mode is dropped.
pub fn derivative(f: &GridFunction, axis: usize) -> GridFunction {
    let grid = f.grid;
    let n = grid.n_points;
    let mut c = forward(f);
    for (i, v) in c.iter_mut().enumerate() {
        let idx = grid.axis_indices(i)[axis];
        let k = if idx * 2 == n { 0.0 } else { grid.wavevector(i)[axis] };
        *v *= Complex64::new(0.0, k);
    }
    inverse(grid, c)
}
