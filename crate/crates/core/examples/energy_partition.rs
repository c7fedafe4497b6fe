//! Exact energies, partition function and conditionals of a tiny RBM.
//!
//! ```bash
//! cargo run --example energy_partition
//! ```

use adaptive_dbn::rbm::{energy, exact_partition, hidden_probabilities, joint_probability};
use adaptive_dbn::{BinaryVector, RbmParams};

fn main() -> adaptive_dbn::Result<()> {
    let params = RbmParams::from_parts(
        vec![0.2, -0.4, 0.1],
        vec![0.0, 0.3],
        vec![1.0, -0.5, 0.25, 0.75, -1.0, 0.5],
    )?;
    let z = exact_partition(&params)?;
    println!("Z = {z:.6}");

    let mut total = 0.0;
    for vi in 0..8 {
        let v = BinaryVector::from_index(vi, 3);
        for hi in 0..4 {
            let h = BinaryVector::from_index(hi, 2);
            let p = joint_probability(&v, &h, &params)?;
            total += p;
            println!("v={:?} h={:?}  E={:+.3}  p={p:.4}", v.as_slice(), h.as_slice(), energy(&v, &h, &params)?);
        }
    }
    println!("sum of p(v,h) = {total:.12}");

    let v = BinaryVector::new(vec![1, 0, 1])?;
    println!("p(h=1 | v=101) = {:?}", hidden_probabilities(&v, &params)?);
    Ok(())
}
