use levy_avg::averaging::integrate;
use levy_avg::stable_noise::{sample_increments, sample_standard_stable, PathStream, StableParams, TimeGrid};
use levy_avg::stats::{ks_critical_001, ks_statistic};
use std::f64::consts::PI;

fn draws(alpha: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut s = PathStream::new(seed, 0);
    (0..n as u64)
        .map(|k| sample_standard_stable(alpha, s.at_step(k)).unwrap())
        .collect()
}

/// One-sample KS distance against a continuous CDF, evaluated on a fixed
/// set of abscissae; never larger than the full supremum.
fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    (0..=400)
        .map(|i| {
            let x = 20.0 * ((i as f64 - 200.0) / 200.0).powi(3);
            let below = v.partition_point(|&s| s <= x) as f64 / n;
            (below - cdf(x)).abs()
        })
        .fold(0.0, f64::max)
}

/// CDF of the law with characteristic function `exp(−|ξ|^α)` by Gil-Pelaez
/// inversion.
fn stable_cdf(alpha: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.5;
    }
    let integrand = |t: f64| {
        if t == 0.0 {
            x
        } else {
            (x * t).sin() * (-t.powf(alpha)).exp() / t
        }
    };
    0.5 + integrate(integrand, 0.0, 40.0, 1e-12) / PI
}

#[test]
fn cauchy_matches_its_cdf() {
    let v = draws(1.0, 20_000, 11);
    let d = ks_one_sample(&v, |x| 0.5 + x.atan() / PI);
    assert!(d < 1.628 / (v.len() as f64).sqrt(), "KS distance {d}");
}

#[test]
fn cauchy_median_absolute_value_is_one() {
    let mut v: Vec<f64> = draws(1.0, 40_000, 12).iter().map(|x| x.abs()).collect();
    v.sort_by(f64::total_cmp);
    let median = v[v.len() / 2];
    // density of |X| at 1 is 1/π, so the median's standard error is π/(2√n)
    assert!((median - 1.0).abs() < 4.0 * PI / (2.0 * (v.len() as f64).sqrt()));
}

#[test]
fn alpha_one_and_a_half_matches_inverted_characteristic_function() {
    let v = draws(1.5, 20_000, 13);
    let d = ks_one_sample(&v, |x| stable_cdf(1.5, x));
    assert!(d < 1.628 / (v.len() as f64).sqrt(), "KS distance {d}");
}

#[test]
fn gaussian_endpoint_matches_normal_cdf() {
    let v = draws(2.0, 20_000, 14);
    let d = ks_one_sample(&v, |x| stable_cdf(2.0, x));
    assert!(d < 1.628 / (v.len() as f64).sqrt(), "KS distance {d}");
}

#[test]
fn increments_scale_as_dt_to_one_over_alpha() {
    for alpha in [0.6, 1.3, 1.8] {
        let grid = TimeGrid::new(0.0, 1.0, 4000).unwrap();
        let inc = sample_increments(StableParams::standard(alpha).unwrap(), grid, 1, 21, 0).unwrap();
        let factor = grid.dt().powf(1.0 / alpha);
        let scaled: Vec<f64> = inc.as_slice().iter().map(|x| x / factor).collect();
        let reference = draws(alpha, 4000, 22);
        let d = ks_statistic(&scaled, &reference);
        assert!(d < ks_critical_001(4000, 4000), "alpha={alpha} D={d}");
    }
}

#[test]
fn coarsened_increments_keep_the_law() {
    let alpha = 1.2;
    let grid = TimeGrid::new(0.0, 1.0, 16_000).unwrap();
    let inc = sample_increments(StableParams::standard(alpha).unwrap(), grid, 1, 23, 0).unwrap();
    let coarse = inc.coarsen(4).unwrap();
    let factor = coarse.grid().dt().powf(1.0 / alpha);
    let scaled: Vec<f64> = coarse.as_slice().iter().map(|x| x / factor).collect();
    let reference = draws(alpha, 4000, 24);
    assert!(ks_statistic(&scaled, &reference) < ks_critical_001(4000, 4000));
}

#[test]
fn planar_increments_are_isotropic() {
    let grid = TimeGrid::new(0.0, 1.0, 36_000).unwrap();
    let inc = sample_increments(StableParams::standard(1.2).unwrap(), grid, 2, 31, 0).unwrap();
    let bins = 36;
    let mut counts = vec![0usize; bins];
    for row in inc.rows() {
        let theta = row[1].atan2(row[0]) + PI;
        counts[((theta / (2.0 * PI) * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let expected = grid.n_steps() as f64 / bins as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 0.99 quantile of chi-square with 35 degrees of freedom
    assert!(chi2 < 57.34, "chi2 = {chi2}");
}

#[test]
fn planar_marginal_matches_one_dimensional_law() {
    // a coordinate of the isotropic law has characteristic function exp(−|ξ|^α)
    let grid = TimeGrid::new(0.0, 1.0, 20_000).unwrap();
    let inc = sample_increments(StableParams::standard(1.5).unwrap(), grid, 2, 32, 0).unwrap();
    let factor = grid.dt().powf(1.0 / 1.5);
    let first: Vec<f64> = inc.rows().map(|r| r[0] / factor).collect();
    let d = ks_one_sample(&first, |x| stable_cdf(1.5, x));
    assert!(d < 1.628 / (first.len() as f64).sqrt(), "KS distance {d}");
}

#[test]
fn signs_are_symmetric() {
    for alpha in [0.5, 1.0, 1.7] {
        let v = draws(alpha, 40_000, 41);
        let n = v.len() as f64;
        let pos = v.iter().filter(|x| **x > 0.0).count() as f64 / n;
        assert!((pos - 0.5).abs() < 3.0 * 0.5 / n.sqrt(), "alpha={alpha} p+={pos}");
        for q in [0.5, 1.0, 2.0] {
            let up = v.iter().filter(|x| **x > q).count() as f64;
            let down = v.iter().filter(|x| **x < -q).count() as f64;
            assert!((up - down).abs() < 3.0 * (up + down).sqrt(), "alpha={alpha} q={q}");
        }
    }
}

#[test]
fn increments_are_reproducible_and_path_keyed() {
    let grid = TimeGrid::new(0.0, 1.0, 500).unwrap();
    let p = StableParams::standard(1.4).unwrap();
    let a = sample_increments(p, grid, 1, 5, 3).unwrap();
    let b = sample_increments(p, grid, 1, 5, 3).unwrap();
    let c = sample_increments(p, grid, 1, 5, 4).unwrap();
    assert_eq!(a.checksum(), b.checksum());
    assert_ne!(a.checksum(), c.checksum());
}
