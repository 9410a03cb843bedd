//! Draws α-stable increments on a time grid, checks reproducibility of the
//! counter-based streams and prints empirical quantiles.

use levy_avg::stable_noise::{sample_increments, StableParams, TimeGrid};

fn main() -> levy_avg::Result<()> {
    let grid = TimeGrid::new(0.0, 1.0, 1000)?;
    for alpha in [0.7, 1.0, 1.5, 1.9] {
        let params = StableParams::standard(alpha)?;
        let inc = sample_increments(params, grid, 1, 42, 0)?;
        let again = sample_increments(params, grid, 1, 42, 0)?;
        assert_eq!(inc.checksum(), again.checksum());

        // Rescaled by dt^{-1/α} the increments are standard stable draws.
        let scale = grid.dt().powf(-1.0 / alpha);
        let mut z: Vec<f64> = inc.as_slice().iter().map(|v| v * scale).collect();
        z.sort_by(f64::total_cmp);
        let q = |p: f64| z[((z.len() - 1) as f64 * p) as usize];
        println!(
            "alpha={alpha}: q25={:+.3} median={:+.3} q75={:+.3} max|z|={:.1} checksum={:016x}",
            q(0.25),
            q(0.5),
            q(0.75),
            z[0].abs().max(z[z.len() - 1].abs()),
            inc.checksum()
        );
    }

    let planar = sample_increments(StableParams::standard(1.2)?, grid, 2, 7, 3)?;
    let coarse = planar.coarsen(10)?;
    println!("planar path: {} fine rows, {} coarse rows", planar.grid().n_steps(), coarse.grid().n_steps());
    Ok(())
}
