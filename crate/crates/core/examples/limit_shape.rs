//! Normalized FPP balls B(t)/t for exponential weights in d = 2: Hausdorff
//! gaps between consecutive t and the convexity defect of the largest ball.

use fpplab::environments::{IidLaw, WeightMode};
use fpplab::fpp::{shape_convergence, WeightModel};
use fpplab::rng::RngStream;

fn main() -> fpplab::Result<()> {
    let model = WeightModel::Iid { law: IidLaw::Exponential { rate: 1.0 }, mode: WeightMode::Edge };
    let rep = shape_convergence(&model, 2, &[4.0, 8.0, 16.0], 40, 8, RngStream::new(5, 0))?;
    for (i, m) in rep.hausdorff_mean.iter().enumerate() {
        println!("gap B({})/{} vs B({})/{}: {m:.4} ± {:.4}", rep.t_levels[i], rep.t_levels[i], rep.t_levels[i + 1], rep.t_levels[i + 1], rep.hausdorff_stderr[i]);
    }
    let defect = rep.convexity_defect.iter().sum::<f64>() / rep.convexity_defect.len() as f64;
    println!("mean convexity defect {defect:.4}, truncated replicas {}", rep.truncated);
    Ok(())
}
