//! Simulation and measurement toolkit for the averaging principle of
//! multiscale SDEs driven by rotationally invariant symmetric α-stable noise.
//!
//! The crate is organised bottom-up:
//!
//! * [`stable_noise`]: exact-in-law α-stable increments with counter-based seeding;
//! * [`spectral`] / [`besov`]: periodic grids, Littlewood–Paley blocks, Besov and
//!   Hölder norms, mollifiers, the fractional Laplacian;
//! * [`pde`]: spectral solver for the nonlocal parabolic and elliptic problems;
//! * [`expr`] / [`sde`]: coefficient expressions and Euler schemes for the
//!   multiscale, averaged and slow-fast systems;
//! * [`averaging`]: averaged coefficients, decay functionals, rate exponents
//!   and the `(α, β)` regions;
//! * [`experiments`]: declarative ε-sweeps, W₁ checks and CSV/manifest output;
//! * [`io`]: binary dumps and CSV helpers.

pub mod error;
pub mod expr;
pub mod spectral;
pub mod stable_noise;
pub mod stats;
pub mod besov;
pub mod pde;
pub mod sde;
pub mod averaging;
pub mod io;
pub mod experiments;
pub mod cli;

pub use error::{Error, Result};
