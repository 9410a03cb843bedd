//! Littlewood–Paley blocks, Besov and Hölder norms of a rough periodic
//! function, and the growth and decay of its Gaussian mollifications.

use std::f64::consts::PI;

use levy_avg::besov::{besov_norm, holder_norm, littlewood_paley, mollifier_rate_check};
use levy_avg::spectral::{GridFunction, PeriodicGrid};

fn main() -> levy_avg::Result<()> {
    let grid = PeriodicGrid::circle(1024)?;
    let f = GridFunction::from_fn(grid, |x| (x[0] - PI).abs());

    let blocks = littlewood_paley(&f);
    let err = blocks.reconstruct().sub(&f)?.sup_norm();
    println!("blocks j=-1..={}, reconstruction error {err:.2e}", blocks.j_max());

    for s in [0.5, 1.0, 1.5] {
        let r = besov_norm(&blocks, s);
        let per: Vec<String> = r.per_block.iter().map(|v| format!("{v:.3}")).collect();
        println!("B^{s}: {:.4}  per block [{}]", r.value, per.join(", "));
    }
    println!("C^0.5 Hölder norm: {:.4}", holder_norm(&f, 0.5)?);

    let n_list = [4.0, 8.0, 16.0, 32.0, 64.0, 128.0];
    let report = mollifier_rate_check(&f, 0.3, 0.5, &n_list)?;
    println!(
        "mollifier kappa=0.3 delta=0.5: growth slope {:.3}, decay slope {:.3}",
        report.growth_slope, report.decay_slope
    );
    Ok(())
}
