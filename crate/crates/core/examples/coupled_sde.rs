//! Couples the oscillating system with its averaged limit through shared
//! stable increments and reports the strong error for a few ε.

use levy_avg::sde::{simulate_coupled, sup_error, AveragedSdeSpec, CoefficientSpec, MultiscaleSdeSpec, TimeStructure};
use levy_avg::stable_noise::{sample_increments, StableParams, TimeGrid};
use levy_avg::stats::mean;

fn main() -> levy_avg::Result<()> {
    let alpha = 1.5;
    let period = std::f64::consts::TAU;
    let drift = CoefficientSpec::additive(&["cos(t)*(1 + 0.5*sin(x))"], 1.0, 0.99, TimeStructure::Periodic(period))?;
    let averaged = CoefficientSpec::additive(&["0"], 1.0, 0.99, TimeStructure::Autonomous)?;
    let avg = AveragedSdeSpec::new(averaged, alpha, vec![0.0])?;
    let params = StableParams::standard(alpha)?;

    for eps in [0.25, 0.125, 0.0625, 0.03125] {
        let ms = MultiscaleSdeSpec::new(drift.clone(), alpha, eps, vec![0.0])?;
        let grid = TimeGrid::with_max_step(1.0, eps / 20.0)?;
        let errors = (0..200)
            .map(|i| {
                let noise = sample_increments(params, grid, 1, 9, i)?;
                let (x, x_bar) = simulate_coupled(&ms, &avg, &noise)?;
                sup_error(&x, &x_bar, 1.0)
            })
            .collect::<levy_avg::Result<Vec<f64>>>()?;
        println!("eps={eps:<8} dt={:.2e} E sup|X - Xbar| = {:.4e}", grid.dt(), mean(&errors));
    }
    Ok(())
}
