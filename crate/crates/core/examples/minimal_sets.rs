//! Minimal and weakly minimal elements, value classes and the partition set.

use nalgebra::DVector;
use setopt::cone::ConeSpec;
use setopt::setorder::{minimal_elements, weakly_minimal_elements, MinimalStructure};

fn main() -> setopt::error::Result<()> {
    let cone = ConeSpec::nonnegative_orthant(2);
    let values: Vec<DVector<f64>> = [[1.0, 3.0], [1.0, 3.0], [2.0, 2.0], [1.0, 4.0], [3.0, 3.0]]
        .iter()
        .map(|v| DVector::from_row_slice(v))
        .collect();

    println!("Min  = {:?}", minimal_elements(&cone, &values)?);
    println!("WMin = {:?}", weakly_minimal_elements(&cone, &values)?);

    let ms = MinimalStructure::compute(&cone, &values, 0.0, 1e-8)?;
    for c in &ms.classes {
        println!("class {:?} at {:?}", c.members, c.representative.as_slice());
    }
    println!("w = {}, |P| = {}", ms.w(), ms.partition_count());
    for a in ms.partitions() {
        println!("selection {a:?}");
    }
    Ok(())
}
