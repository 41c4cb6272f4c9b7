//! Occupation times of random interlacements on a 3³ target: vacancy of a
//! single site against `exp(−u/g(x,x))` and mean occupation against `u`.

use fpplab::environments::{exp1_green_column, InterlacementSampler};
use fpplab::lattice::LatticeBox;
use fpplab::rng::RngStream;

fn main() -> fpplab::Result<()> {
    let target = LatticeBox::cube(3, 3)?;
    let sampler = InterlacementSampler::new(&target, 3)?;
    let centre = target.index_of(&[1, 1, 1]).unwrap();
    let amb = sampler.ambient();
    let a = amb.index_of(&[1, 1, 1]).unwrap();
    let g = exp1_green_column(amb, a)?[a];
    println!("capacity of the target: {:.4}", sampler.capacity());
    for u in [0.5, 1.0, 2.0] {
        let n = 5000;
        let (mut vacant, mut occ) = (0, 0.0);
        for r in 0..n {
            let f = sampler.sample(u, RngStream::new(11, r))?;
            vacant += (f.values[centre] == 0.0) as u32;
            occ += f.values[centre];
        }
        println!(
            "u = {u}: vacancy {:.4} (exact {:.4}), mean occupation {:.4} (exact {u})",
            vacant as f64 / n as f64,
            (-u / g).exp(),
            occ / n as f64
        );
    }
    Ok(())
}
