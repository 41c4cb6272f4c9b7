//! Crossing probabilities of GFF level sets from Q_L to the complement of
//! Q_2L and the finite-size critical level ĥ_*(L).

use fpplab::analysis::crossing_curve;
use fpplab::rng::RngStream;

fn main() -> fpplab::Result<()> {
    let h_grid: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
    let curves = crossing_curve(3, &[4, 8], &h_grid, 4, 40, 0.95, RngStream::new(9, 0))?;
    for c in &curves {
        println!("L = {} (box radius {}), h_* = {:?}", c.scale, c.box_radius, c.h_star);
        for (h, p) in c.h_grid.iter().zip(&c.probabilities) {
            println!("  h = {h:+.2}: {:.3} [{:.3}, {:.3}]", p.estimate, p.low, p.high);
        }
    }
    Ok(())
}
