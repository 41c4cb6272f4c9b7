//! Samples the Dirichlet GFF on a 9³ box and compares the empirical
//! covariance at a few pairs with the exact Green function.

use fpplab::environments::{dirichlet_green, sample_gff_dirichlet};
use fpplab::lattice::LatticeBox;
use fpplab::rng::RngStream;

fn main() -> fpplab::Result<()> {
    let lat = LatticeBox::cube(3, 9)?;
    let x = [4, 4, 4];
    let replicas = 4000;
    let fields: Vec<_> = (0..replicas).map(|r| sample_gff_dirichlet(&lat, RngStream::new(7, r))).collect::<Result<_, _>>()?;
    println!("{:>10} {:>12} {:>12}", "y", "empirical", "exact");
    for r in 0..4 {
        let y = [4 + r, 4, 4];
        let (ix, iy) = (lat.index_of(&x).unwrap(), lat.index_of(&y).unwrap());
        let emp = fields.iter().map(|f| f.values[ix] * f.values[iy]).sum::<f64>() / replicas as f64;
        println!("{:>10?} {emp:>12.5} {:>12.5}", y, dirichlet_green(&lat, &x, &y)?);
    }
    Ok(())
}
