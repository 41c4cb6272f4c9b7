//! Zero-weight connectivity and a subadditivity check on one realization.

use fpplab::environments::{sample_iid_weights, IidLaw, WeightMode};
use fpplab::fpp::{fpp_point_distance, subadditivity_check, zero_cluster_criterion};
use fpplab::lattice::LatticeBox;
use fpplab::rng::RngStream;

fn main() -> fpplab::Result<()> {
    let lat = LatticeBox::new(&[61, 21], &[-10, -10])?;
    let s = lat.index_of(&[0, 0]).unwrap();
    let t = lat.index_of(&[40, 0]).unwrap();
    for p in [0.3, 0.7] {
        let w = sample_iid_weights(&lat, IidLaw::BernoulliZero { p }, WeightMode::Edge, RngStream::new(2, 0))?;
        let linked = zero_cluster_criterion(&w, s, t)?;
        let d = fpp_point_distance(&w, s, t)?;
        let sub = subadditivity_check(&w, &[-10, 0], &[1, 0], 25)?;
        println!(
            "p = {p}: zero-connected {linked}, d(0, 40e1) = {d}, subadditive {} ({} <= {} + {})",
            sub.holds, sub.whole, sub.first, sub.second
        );
    }
    Ok(())
}
