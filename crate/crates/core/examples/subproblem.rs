//! The min-max direction subproblem, solved by the dual scheme and checked on a grid.

use nalgebra::{DMatrix, DVector};
use setopt::direction::{solve_minmax, InnerConfig};
use setopt::oracle::{grid_minmax_rounds, GridSpec};

fn main() -> setopt::error::Result<()> {
    let g = vec![
        DVector::from_vec(vec![1.0, -2.0]),
        DVector::from_vec(vec![-1.5, 0.5]),
    ];
    let h = vec![
        DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]),
        DMatrix::identity(2, 2),
    ];
    let sol = solve_minmax(&g, &h, None, &InnerConfig::default())?;
    println!(
        "u = {:?}, phi = {:.8}, lambda = {:?}, gap = {:.1e} after {} iterations",
        sol.u.as_slice(),
        sol.phi,
        sol.lambda,
        sol.gap,
        sol.iterations
    );

    let grid = GridSpec::uniform(&[(-5.0, 5.0), (-5.0, 5.0)], 0.02)?;
    let (u, phi) = grid_minmax_rounds(&g, &h, &grid, 5)?;
    println!("grid: u = {:?}, phi = {phi:.8}", u.as_slice());
    Ok(())
}
