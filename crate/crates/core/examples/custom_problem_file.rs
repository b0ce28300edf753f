//! A problem defined in the text format, solved with both methods.

use nalgebra::DVector;
use setopt::problem::parse_problem;
use setopt::solver::{run, Method, SolverConfig};

const PROBLEM: &str = "\
[meta] name=bowls n=2 m=2 p=3
[box]
-3 3
-3 3
[functions]
(x1 - i)^2 + x2^2
x1^2 + (x2 + i/2)^2
";

fn main() -> setopt::error::Result<()> {
    let ps = parse_problem(PROBLEM, "bowls")?;
    let x0 = DVector::from_vec(vec![2.0, 2.0]);
    for method in [Method::QuasiNewton, Method::SteepestDescent] {
        let cfg = SolverConfig {
            method,
            ..SolverConfig::default()
        };
        let trace = run(&ps, &x0, &cfg)?;
        println!(
            "{method}: {:?} after {} iterations at {:?}",
            trace.status, trace.iterations, trace.final_x
        );
    }
    Ok(())
}
