//! The seven built-in instances and their images at a point.

use setopt::problem::{builtin, BUILTIN_NAMES};

fn main() -> setopt::error::Result<()> {
    for name in BUILTIN_NAMES {
        let ps = builtin(name)?;
        println!(
            "{name}: n = {}, m = {}, p = {}, orthant cone: {}, sample box {:?}",
            ps.n,
            ps.m,
            ps.p,
            ps.cone.is_orthant(),
            ps.sample_box
        );
    }

    let ex5 = builtin("ex5")?;
    let x = nalgebra::DVector::from_element(1, 4.0);
    for (i, y) in ex5.eval_f(&x)?.iter().enumerate() {
        println!("ex5 f^{}(4) = ({:.4}, {:.4})", i + 1, y[0], y[1]);
    }
    println!("ex5 J f^1(4) = {:?}", ex5.jacobian(0, &x)?.as_slice());
    Ok(())
}
