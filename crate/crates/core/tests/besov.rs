use std::f64::consts::PI;

use levy_avg::besov::{besov, besov_norm, littlewood_paley, mollify, Mollifier};
use levy_avg::spectral::{GridFunction, PeriodicGrid};
use proptest::prelude::*;

/// Smooth step from 1 (t ≤ 0) to 0 (t ≥ 1).
fn step(t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let a = (-1.0 / (1.0 - t)).exp();
        a / (a + (-1.0 / t).exp())
    }
}

fn cutoff(r: f64) -> f64 {
    step(2.0 * (r - 1.0))
}

fn annulus(j: i32, r: f64) -> f64 {
    if j < 0 {
        cutoff(2.0 * r)
    } else {
        let s = r / 2f64.powi(j);
        cutoff(s) - cutoff(2.0 * s)
    }
}

/// Block sup norms by direct O(N²) discrete Fourier sums.
fn dense_block_norms(values: &[f64], j_max: i32) -> Vec<f64> {
    let n = values.len();
    let coeffs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (m, v) in values.iter().enumerate() {
                let a = -2.0 * PI * (k * m) as f64 / n as f64;
                re += v * a.cos();
                im += v * a.sin();
            }
            (re / n as f64, im / n as f64)
        })
        .collect();
    let freq = |k: usize| -> f64 {
        if k <= n / 2 {
            k as f64
        } else {
            k as f64 - n as f64
        }
    };
    (-1..=j_max)
        .map(|j| {
            (0..n)
                .map(|m| {
                    let mut s = 0.0;
                    for (k, (re, im)) in coeffs.iter().enumerate() {
                        let w = annulus(j, freq(k).abs());
                        if w != 0.0 {
                            let a = 2.0 * PI * (k * m) as f64 / n as f64;
                            s += w * (re * a.cos() - im * a.sin());
                        }
                    }
                    s.abs()
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

fn circle(n: usize) -> PeriodicGrid {
    PeriodicGrid::circle(n).unwrap()
}

#[test]
fn cos_four_x_sits_in_one_block() {
    let f = GridFunction::from_fn(circle(64), |x| (4.0 * x[0]).cos());
    for s in [-0.5, 0.0, 0.7, 1.3] {
        assert!((besov(&f, s) - 4f64.powf(s)).abs() < 1e-12 * 4f64.powf(s).max(1.0));
    }
}

#[test]
fn cos_five_x_splits_evenly() {
    // |5|/4 = 1.25 is the midpoint of the transition, so blocks 2 and 3 each carry half
    let f = GridFunction::from_fn(circle(64), |x| (5.0 * x[0]).cos());
    let r = besov_norm(&littlewood_paley(&f), 0.0);
    assert!((r.per_block[3] - 0.5).abs() < 1e-12);
    assert!((r.per_block[4] - 0.5).abs() < 1e-12);
    assert!((besov(&f, 1.0) - 4.0).abs() < 1e-12);
}

#[test]
fn matches_dense_fourier_oracle() {
    let n = 64;
    let f = GridFunction::from_fn(circle(n), |x| {
        let x = x[0];
        0.3 + (4.0 * x).cos() + 0.5 * (7.0 * x).sin() - 0.25 * (13.0 * x + 0.4).cos() + (x - PI).abs() * 0.1
    });
    let d = littlewood_paley(&f);
    let oracle = dense_block_norms(f.values(), d.j_max());
    let got = besov_norm(&d, 0.0).per_block;
    assert_eq!(got.len(), oracle.len());
    for (g, o) in got.iter().zip(&oracle) {
        assert!((g - o).abs() < 1e-10, "{g} vs {o}");
    }
}

#[test]
fn gaussian_mollifier_damps_each_mode() {
    let n = 5.0;
    let f = GridFunction::from_fn(circle(128), |x| (3.0 * x[0]).cos() + (9.0 * x[0]).sin());
    let m = mollify(&f, &Mollifier::new(n).unwrap());
    let want = GridFunction::from_fn(circle(128), |x| {
        (-9.0f64 / (2.0 * n * n)).exp() * (3.0 * x[0]).cos() + (-81.0f64 / (2.0 * n * n)).exp() * (9.0 * x[0]).sin()
    });
    assert!(m.sub(&want).unwrap().sup_norm() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_trig_polynomials_match_oracle(
        amps in prop::collection::vec(-1.0f64..1.0, 8),
        freqs in prop::collection::vec(0usize..=15, 8),
        s in -1.0f64..1.5,
    ) {
        let n = 32;
        let f = GridFunction::from_fn(circle(n), |x| {
            amps.iter().zip(&freqs).map(|(a, k)| a * (*k as f64 * x[0] + 0.3 * *k as f64).cos()).sum()
        });
        let d = littlewood_paley(&f);
        let oracle = dense_block_norms(f.values(), d.j_max());
        let want = oracle
            .iter()
            .enumerate()
            .map(|(i, b)| 2f64.powf((i as f64 - 1.0) * s) * b)
            .fold(0.0, f64::max);
        prop_assert!((besov_norm(&d, s).value - want).abs() < 1e-10 * want.max(1.0));
        prop_assert!(d.reconstruct().sub(&f).unwrap().sup_norm() < 1e-10);
    }
}
