use std::f64::consts::TAU;

use levy_avg::experiments::{
    run, run_mollifier_check, run_slow_fast, run_strong_rate, run_weak_w1, ExperimentConfig, ExperimentKind,
    GridConfig, MollifierConfig, SystemConfig,
};
use levy_avg::sde::{euler_maruyama, AveragedSdeSpec, CoefficientSpec, PathEnsemble, TimeStructure};
use levy_avg::stable_noise::{sample_increments, StableParams, TimeGrid};
use levy_avg::stats::wasserstein1;
use levy_avg::Error;

fn ladder(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| 2f64.powi(-k)).collect()
}

fn base(kind: ExperimentKind, system: SystemConfig) -> ExperimentConfig {
    ExperimentConfig {
        kind,
        master_seed: 3,
        n_paths: 200,
        p: 1.0,
        epsilon_list: ladder(2, 5),
        strict: false,
        batches: 10,
        grid: GridConfig::default(),
        system,
        schauder: None,
        mollifier: None,
    }
}

fn slow_fast(f: &str) -> ExperimentConfig {
    base(
        ExperimentKind::SlowFast,
        SystemConfig {
            alpha: Some(1.5),
            x0: vec![0.0],
            f: vec![f.into()],
            fast_rate: Some(1.0),
            y0: vec![0.0],
            ..SystemConfig::default()
        },
    )
}

fn separable_strong() -> ExperimentConfig {
    base(
        ExperimentKind::StrongRate,
        SystemConfig {
            alpha: Some(1.5),
            x0: vec![0.2],
            drift: vec!["cos(t)*(1 + 0.5*sin(x))".into()],
            averaged_drift: vec!["0".into()],
            beta: Some(0.99),
            period: Some(TAU),
            ..SystemConfig::default()
        },
    )
}

#[test]
fn zero_coupling_has_zero_error() {
    let out = run_slow_fast(&slow_fast("0")).unwrap();
    assert!(out.rows.iter().all(|r| r.mean == 0.0 && r.stderr == 0.0));
    assert!(out.rate.is_none());
}

#[test]
fn separable_slow_fast_error_decreases() {
    let mut cfg = slow_fast("cos(y)*(1 + 0.5*sin(x))");
    cfg.n_paths = 400;
    let out = run_slow_fast(&cfg).unwrap();
    for w in out.rows.windows(2) {
        let se = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        assert!(w[1].mean < w[0].mean + 2.0 * se, "{} then {}", w[0].mean, w[1].mean);
    }
    assert!(out.slow_fast_theory.is_some());
}

#[test]
fn marginal_w1_is_below_the_coupling_cost() {
    let out = run_strong_rate(&separable_strong()).unwrap();
    for r in &out.rows {
        assert!(r.w1_final <= r.mean_abs_final + 1e-12, "{} > {}", r.w1_final, r.mean_abs_final);
        assert!(r.mean_abs_final <= r.mean + 1e-12);
    }
    let rate = out.rate.unwrap();
    assert_eq!(rate.abscissa, "epsilon");
    assert_eq!(rate.n_points, 4);
}

#[test]
fn drift_outside_a1_is_a_region_error() {
    let mut cfg = separable_strong();
    cfg.system.beta = Some(0.1);
    assert!(matches!(run_strong_rate(&cfg), Err(Error::Region { .. })));
}

#[test]
fn wrong_averaged_drift_is_rejected() {
    let mut cfg = separable_strong();
    cfg.system.averaged_drift = vec!["0.5".into()];
    assert!(matches!(run_strong_rate(&cfg), Err(Error::Config(_))));
}

#[test]
fn under_resolved_strict_run_is_a_resolution_error() {
    let mut cfg = separable_strong();
    cfg.grid.steps_per_epsilon = 4.0;
    cfg.strict = true;
    let err = run(&cfg).unwrap_err();
    assert!(err.is_numerical(), "{err}");
    cfg.strict = false;
    assert!(!run_strong_rate(&cfg).unwrap().warnings.is_empty());
}

#[test]
fn identical_and_shifted_ensembles() {
    let bar = CoefficientSpec::additive(&["-x"], 1.0, 0.99, TimeStructure::Autonomous).unwrap();
    let sys = AveragedSdeSpec::new(bar, 1.5, vec![0.0]).unwrap();
    let grid = TimeGrid::new(0.0, 1.0, 50).unwrap();
    let params = StableParams::standard(1.5).unwrap();
    let ens = |seed| {
        PathEnsemble::simulate(300, seed, "ou", |i| euler_maruyama(&sys, &sample_increments(params, grid, 1, seed, i)?))
            .unwrap()
    };
    let a = ens(4);
    let b = ens(4);
    assert_eq!(wasserstein1(&a.marginal(50, 0), &b.marginal(50, 0)).unwrap(), 0.0);
    let c = 0.37;
    let shifted: Vec<f64> = a.marginal(50, 0).iter().map(|v| v + c).collect();
    assert!((wasserstein1(&a.marginal(50, 0), &shifted).unwrap() - c).abs() < 1e-12);
    assert_eq!(wasserstein1(&[0.0, 2.0], &[1.0, 1.0]).unwrap(), 1.0);
}

#[test]
fn weak_run_reports_nonnegative_distances() {
    let mut cfg = base(
        ExperimentKind::WeakW1,
        SystemConfig {
            alpha: Some(1.6),
            x0: vec![0.5],
            rough_profile: Some("abs(sin(x))^0.2".into()),
            time_factor: Some("1 + 2*cos(t)".into()),
            mollify_n: Some(32.0),
            w1_times: vec![0.5, 1.0],
            ..SystemConfig::default()
        },
    );
    cfg.n_paths = 300;
    let out = run_weak_w1(&cfg).unwrap();
    assert_eq!(out.estimates.len(), 8);
    assert!(out.estimates.iter().all(|w| w.value >= 0.0 && w.n_samples == 300));
    cfg.system.w1_times = vec![0.33];
    assert!(matches!(run_weak_w1(&cfg), Err(Error::Config(_))));
}

#[test]
fn sawtooth_mollifier_slopes() {
    let cfg = ExperimentConfig {
        mollifier: Some(MollifierConfig {
            function: "abs(x - pi)".into(),
            grid_points: 1024,
            kappa: 0.3,
            smoothness: None,
            deltas: vec![0.5],
            n_list: vec![4.0, 8.0, 16.0, 32.0, 64.0, 128.0],
        }),
        ..base(ExperimentKind::MollifierCheck, SystemConfig::default())
    };
    let out = run_mollifier_check(&cfg).unwrap();
    let r = &out.reports[0];
    assert!(r.decay_slope <= -0.45, "decay {}", r.decay_slope);
    assert!(r.growth_slope <= 0.55, "growth {}", r.growth_slope);
    assert_eq!(out.table.table.rows.len(), 6);
}
