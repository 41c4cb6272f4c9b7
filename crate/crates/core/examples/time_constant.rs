//! Time constant for i.i.d. Bernoulli passage times in d = 2 on both sides
//! of the bond percolation threshold p_c = 1/2.

use fpplab::environments::{IidLaw, WeightMode};
use fpplab::fpp::{estimate_time_constant, WeightModel};
use fpplab::rng::RngStream;

fn main() -> fpplab::Result<()> {
    for p in [0.1, 0.9] {
        let model = WeightModel::Iid { law: IidLaw::BernoulliZero { p }, mode: WeightMode::Edge };
        let est = estimate_time_constant(&model, &[1, 0], &[16, 32, 64], 40, None, 0.95, RngStream::new(3, 0))?;
        println!("P(t = 0) = {p}");
        for l in &est.levels {
            println!("  n = {:>3}: d(0, n e1)/n = {:.4} ± {:.4}", l.n, l.mean, l.half_width);
        }
        println!("  mu_hat = {:.4}, interval [{:.4}, {:.4}]", est.mu_hat, est.mu_interval.low, est.mu_interval.high);
    }
    Ok(())
}
