//! Intrinsic metric d_θ on a GFF environment against Euclidean distance.

use fpplab::environments::sample_gff_dirichlet;
use fpplab::lattice::{l2_distance, LatticeBox};
use fpplab::rcm::{build_gff_rcm, chemical_distance, theta_metric};
use fpplab::rng::RngStream;

fn main() -> fpplab::Result<()> {
    let lat = LatticeBox::cube(3, 24)?;
    for seed in 0..3 {
        let field = sample_gff_dirichlet(&lat, RngStream::new(seed, 0))?;
        let env = build_gff_rcm(&field, 0.25, false)?;
        let x = lat.index_of(&[2, 12, 12]).unwrap();
        let d = theta_metric(&env, &[x])?;
        let hops = chemical_distance(&env, &[x])?;
        let ratio = (0..lat.num_vertices())
            .filter_map(|y| {
                let r = l2_distance(&lat.coords(x), &lat.coords(y));
                (r >= 16.0).then(|| d.get(y) / r)
            })
            .fold(f64::INFINITY, f64::min);
        println!("field {seed}: min d_θ/|x−y| over |x−y| >= 16 is {ratio:.4}; chemical distance to the far face {}", hops.get(lat.index_of(&[23, 12, 12]).unwrap()));
    }
    Ok(())
}
