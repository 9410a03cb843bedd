//! Slow-fast system with an Ornstein–Uhlenbeck fast variable against the
//! averaged equation whose drift comes from Gauss–Hermite quadrature.

use levy_avg::averaging::{gaussian_fast_average, slow_fast_rate};
use levy_avg::expr::Expr;
use levy_avg::sde::{
    euler_maruyama, simulate_slow_fast, sup_error, AveragedSdeSpec, CoefficientSpec, FastDrift, Field,
    SlowFastSpec, TimeStructure,
};
use levy_avg::stable_noise::{sample_increments, StableParams, TimeGrid};
use levy_avg::stats::mean;

fn main() -> levy_avg::Result<()> {
    let alpha = 1.5;
    let f = "cos(y)*(1 + 0.5*sin(x))";
    let f_bar = gaussian_fast_average(&Expr::parse(f)?, 1.0, 1, 40)?;
    println!("f_bar(0.3) = {:.6}", f_bar.eval_tx(0.0, &[0.3]));

    let bar = CoefficientSpec::new(vec![f_bar], vec![Field::constant(1.0)], 0.99, TimeStructure::Autonomous)?;
    let avg = AveragedSdeSpec::new(bar, alpha, vec![0.0])?;
    let params = StableParams::standard(alpha)?;

    for eps in [0.125, 0.0625, 0.03125] {
        let spec = SlowFastSpec::new(
            vec![Field::parse(f)?],
            FastDrift::Linear(1.0),
            eps,
            alpha,
            vec![0.0],
            vec![0.0],
            vec![Field::constant(1.0)],
        )?;
        let grid = TimeGrid::with_max_step(1.0, eps / 20.0)?;
        let errors = (0..200)
            .map(|i| {
                let noise = sample_increments(params, grid, 1, 5, i)?;
                let (x, _y) = simulate_slow_fast(&spec, &noise, 6)?;
                let x_bar = euler_maruyama(&avg, &noise)?;
                sup_error(&x, &x_bar, 1.0)
            })
            .collect::<levy_avg::Result<Vec<f64>>>()?;
        println!("eps={eps:<8} E sup|X - Xbar| = {:.4e}", mean(&errors));
    }

    let rate = slow_fast_rate(alpha, 0.99, 0.05, 1e-3)?;
    println!("predicted exponent {:.4} (lower bound {:.4})", rate.rate, rate.lower_bound);
    Ok(())
}
