//! Deterministic reductions, batch standard errors, log-log fits and
//! one-dimensional optimal-transport distances.

use serde::Serialize;

use crate::error::{Error, Result};

/// Pairwise (cascade) summation; the result depends only on the order of
/// `values`, never on how they were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(values) / values.len() as f64
}

/// Standard error of the mean from `n_batches` contiguous batch means.
pub fn batch_stderr(values: &[f64], n_batches: usize) -> Result<f64> {
    if n_batches < 2 || values.len() < n_batches {
        return Err(Error::param(format!(
            "need at least {n_batches} >= 2 samples for batching, got {}",
            values.len()
        )));
    }
    let means = batch_means(values, n_batches);
    let m = mean(&means);
    let var = means.iter().map(|b| (b - m).powi(2)).sum::<f64>() / (n_batches - 1) as f64;
    Ok((var / n_batches as f64).sqrt())
}

pub(crate) fn batch_bounds(len: usize, n_batches: usize) -> Vec<(usize, usize)> {
    (0..n_batches)
        .map(|b| (b * len / n_batches, (b + 1) * len / n_batches))
        .collect()
}

fn batch_means(values: &[f64], n_batches: usize) -> Vec<f64> {
    batch_bounds(values.len(), n_batches)
        .into_iter()
        .map(|(lo, hi)| mean(&values[lo..hi]))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub residuals: Vec<f64>,
    pub r_squared: f64,
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::Shape("fit abscissa and ordinate differ in length".into()));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::param("a fit needs at least two points"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite value in fit data".into()));
    }
    let xm = mean(x);
    let ym = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("fit abscissa is constant".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - intercept - slope * a).collect();
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    let syy: f64 = y.iter().map(|v| (v - ym).powi(2)).sum();
    let slope_stderr = if n > 2 {
        (sse / (n - 2) as f64 / sxx).sqrt()
    } else {
        f64::NAN
    };
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr,
        residuals,
        r_squared,
    })
}

/// Fit of `ln y` against `ln x`.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return Err(Error::Degenerate("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Kantorovich–Rubinstein distance between two empirical measures on the
/// line, `∫ |F_a(x) − F_b(x)| dx`. Equal sample sizes reduce to the mean
/// absolute difference of order statistics.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::param("W1 needs non-empty samples"));
    }
    let sa = sorted(a);
    let sb = sorted(b);
    if sa.len() == sb.len() {
        let d: Vec<f64> = sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).collect();
        return Ok(mean(&d));
    }
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = sa[0].min(sb[0]);
    let mut total = 0.0;
    while i < sa.len() || j < sb.len() {
        let next = match (sa.get(i), sb.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        total += (i as f64 / na - j as f64 / nb).abs() * (next - prev);
        while i < sa.len() && sa[i] <= next {
            i += 1;
        }
        while j < sb.len() && sb[j] <= next {
            j += 1;
        }
        prev = next;
    }
    Ok(total)
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let sa = sorted(a);
    let sb = sorted(b);
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at level 0.01.
pub fn ks_critical_001(n: usize, m: usize) -> f64 {
    1.628 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_point_w1() {
        assert_eq!(wasserstein1(&[0.0, 2.0], &[1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn w1_unequal_sizes_matches_brute_force() {
        // {0, 1} vs {0.5}: each atom moves half a unit.
        let w = wasserstein1(&[0.0, 1.0], &[0.5]).unwrap();
        assert!((w - 0.5).abs() < 1e-15);
        let w = wasserstein1(&[0.0, 0.0, 3.0], &[1.0]).unwrap();
        assert!((w - (2.0 / 3.0 + 2.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-14);
        assert!(f.slope_stderr < 1e-12);
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn batch_stderr_of_constant_is_zero() {
        assert_eq!(batch_stderr(&[2.0; 100], 10).unwrap(), 0.0);
        assert!(batch_stderr(&[1.0; 5], 10).is_err());
    }

    #[test]
    fn ks_identical_is_zero() {
        let a = [0.3, 0.1, 0.2];
        assert_eq!(ks_statistic(&a, &a), 0.0);
        assert_eq!(ks_statistic(&[0.0, 1.0], &[2.0, 3.0]), 1.0);
    }

    proptest! {
        #[test]
        fn w1_is_shift_and_symmetric(v in prop::collection::vec(-1e3f64..1e3, 1..60), c in -50.0f64..50.0) {
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let w = wasserstein1(&v, &shifted).unwrap();
            prop_assert!((w - c.abs()).abs() < 1e-9);
            prop_assert_eq!(wasserstein1(&v, &v).unwrap(), 0.0);
        }

        #[test]
        fn w1_below_any_coupling(a in prop::collection::vec(-10f64..10.0, 1..40), seed in 0u64..1000) {
            let b: Vec<f64> = a.iter().enumerate().map(|(i, x)| x * 0.5 + ((i as u64 * 7 + seed) % 5) as f64).collect();
            let coupled = mean(&a.iter().zip(&b).map(|(x, y)| (x - y).abs()).collect::<Vec<_>>());
            prop_assert!(wasserstein1(&a, &b).unwrap() <= coupled + 1e-12);
        }

        #[test]
        fn pairwise_matches_naive(v in prop::collection::vec(-1.0f64..1.0, 0..500)) {
            let naive: f64 = v.iter().sum();
            prop_assert!((pairwise_sum(&v) - naive).abs() < 1e-12);
        }
    }
}
