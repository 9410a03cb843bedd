//! Spectral solution of the nonlocal parabolic problem, the Schauder ratio
//! along a λ ladder, and the resolvent equation with its detected λ₀.

use levy_avg::besov::besov;
use levy_avg::pde::{elliptic_solve, find_lambda0, schauder_ratio, solve_forward, Forcing, NonlocalPdeSpec};
use levy_avg::spectral::{GridFunction, PeriodicGrid};

fn main() -> levy_avg::Result<()> {
    let grid = PeriodicGrid::circle(256)?;
    let alpha = 1.5;
    let forcing = Forcing::tabulate(grid, 1.0, 20, |t, x| (1.0 + t) * ((x[0]).cos() + (8.0 * x[0]).sin()));

    for lambda in [0.0, 4.0, 64.0] {
        let spec = NonlocalPdeSpec::new(alpha, 1.0, lambda, forcing.clone(), 1.0, 1e-3).with_snapshot_stride(20);
        let sol = solve_forward(&spec)?;
        let ratio = schauder_ratio(&sol, 0.0, alpha / 2.0)?;
        println!(
            "lambda={lambda:>4}: sup|u(T)|={:.4}, B^alpha(u(T))={:.4}, ratio={ratio:.4}",
            sol.final_state().sup_norm(),
            besov(sol.final_state(), alpha)
        );
    }

    let f = GridFunction::from_fn(grid, |x| (3.0 * x[0]).sin());
    let g = [GridFunction::from_fn(grid, |x| 2.0 * (x[0]).cos())];
    let lambda0 = find_lambda0(alpha, 1.0, Some(&g), &f, 0.125, 20)?;
    let sol = elliptic_solve(alpha, 1.0, 2.0 * lambda0, Some(&g), &f)?;
    println!(
        "resolvent: lambda0={lambda0}, {} iterations, residual {:.2e}, contraction {:.3}",
        sol.iterations, sol.residual, sol.contraction
    );
    Ok(())
}
