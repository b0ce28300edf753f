//! First-order report at a terminal point, followed by a grid search for a
//! strictly better image set.

use setopt::oracle::{certify_weak_minimality, GridSpec};
use setopt::problem::builtin;
use setopt::solver::{run, stationarity_report, SolverConfig};

fn main() -> setopt::error::Result<()> {
    let ps = builtin("ex5")?;
    let cfg = SolverConfig::default();
    let trace = run(&ps, &nalgebra::DVector::from_element(1, 4.0), &cfg)?;
    let xbar = nalgebra::DVector::from_column_slice(&trace.final_x);
    println!("{:?} at x = {:.6}", trace.status, xbar[0]);

    let report = stationarity_report(&ps, &xbar, None, &cfg)?;
    println!(
        "phi = {:.3e} (threshold {:.3e}), w = {}, regular: {}",
        report.phi, report.threshold, report.w, report.regular
    );

    let grid = GridSpec::uniform(&ps.sample_box, 1e-3)?;
    println!(
        "grid verdict: {:?}",
        certify_weak_minimality(&ps, &xbar, &grid)?
    );
    Ok(())
}
