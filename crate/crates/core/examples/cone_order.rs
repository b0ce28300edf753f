//! Orders induced by a polyhedral cone and the Gerstewitz scalarization.

use nalgebra::DVector;
use setopt::cone::ConeSpec;
use setopt::oracle::gerstewitz_bisect;

fn main() -> setopt::error::Result<()> {
    // K = { z : 6 z1 - 2 z2 >= 0, -7 z1 + 10 z2 >= 0 }, e = (1, 1)
    let cone = ConeSpec::from_rows(&[vec![6.0, -2.0], vec![-7.0, 10.0]], &[1.0, 1.0])?;
    println!("Lipschitz constant of G_e: {:.4}", cone.lipschitz());

    let y = DVector::from_vec(vec![1.0, 2.0]);
    let z = DVector::from_vec(vec![3.0, 5.0]);
    println!("y <= z: {}", cone.leq(&y, &z, 0.0)?);
    println!("y <  z: {}", cone.lt(&y, &z, 0.0)?);
    println!("z <= y: {}", cone.leq(&z, &y, 0.0)?);

    for v in [&y, &z] {
        let closed = cone.gerstewitz(v)?;
        let bisected = gerstewitz_bisect(&cone, v, 1e-12)?;
        println!(
            "G_e({:?}) = {closed:.6} (bisection {bisected:.6})",
            v.as_slice()
        );
    }
    println!("varsigma({{y, z}}) = {:.6}", cone.varsigma(&[y, z])?);
    Ok(())
}
