//! One quasi-Newton run on ex1 from x0 = 2.3, printed as an iteration table.

use nalgebra::DVector;
use setopt::problem::builtin;
use setopt::solver::{run, SolverConfig};

fn main() -> setopt::error::Result<()> {
    let ps = builtin("ex1")?;
    let trace = run(
        &ps,
        &DVector::from_element(1, 2.3),
        &SolverConfig::default(),
    )?;
    println!(" k        x_k        |u|          phi     varsigma   t");
    for r in &trace.records {
        println!(
            "{:>2} {:>10.6} {:>10.3e} {:>12.4e} {:>12.6} {}",
            r.k,
            r.x[0],
            r.norm_u,
            r.phi,
            r.varsigma,
            r.t.map_or(String::from("-"), |t| format!("{t:.4}"))
        );
    }
    println!("{:?} after {} iterations", trace.status, trace.iterations);
    Ok(())
}
