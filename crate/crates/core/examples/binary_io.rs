//! Round-trips increments, grid functions and sample paths through the
//! binary formats, and renders an ensemble as CSV.

use std::io::Cursor;

use levy_avg::io::{
    ensemble_csv, read_grid_function, read_increments, read_paths, write_grid_function, write_increments, write_paths,
};
use levy_avg::sde::{euler_maruyama, AveragedSdeSpec, CoefficientSpec, PathEnsemble, TimeStructure};
use levy_avg::spectral::{GridFunction, PeriodicGrid};
use levy_avg::stable_noise::{sample_increments, StableParams, TimeGrid};

fn main() -> levy_avg::Result<()> {
    let params = StableParams::standard(1.3)?;
    let grid = TimeGrid::new(0.0, 1.0, 64)?;

    let inc = sample_increments(params, grid, 2, 11, 0)?;
    let mut buf = Vec::new();
    write_increments(&mut buf, &inc)?;
    let back = read_increments(&mut Cursor::new(&buf))?;
    println!("increments: {} bytes, checksum preserved: {}", buf.len(), back.checksum() == inc.checksum());

    let f = GridFunction::from_fn(PeriodicGrid::new(2, std::f64::consts::TAU, 32)?, |x| x[0].sin() * x[1].cos());
    buf.clear();
    write_grid_function(&mut buf, &f)?;
    println!("grid function: {} bytes, equal: {}", buf.len(), read_grid_function(&mut Cursor::new(&buf))? == f);

    let ou = CoefficientSpec::additive(&["-x"], 1.0, 0.99, TimeStructure::Autonomous)?;
    let sys = AveragedSdeSpec::new(ou, 1.3, vec![1.0])?;
    let ens = PathEnsemble::simulate(4, 11, "ou", |i| euler_maruyama(&sys, &sample_increments(params, grid, 1, 11, i)?))?;
    buf.clear();
    write_paths(&mut buf, &ens.paths)?;
    let paths = read_paths(&mut Cursor::new(&buf))?;
    println!("paths: {} bytes, {} paths read back", buf.len(), paths.len());

    let csv = ensemble_csv(&ens).render();
    for line in csv.lines().take(4) {
        println!("{line}");
    }
    Ok(())
}
