//! Multi-scale schedule L_k, a_k and sprinkling budgets ε_k with invariant flags.

use fpplab::fpp::build_scale_schedule;

fn main() -> fpplab::Result<()> {
    let s = build_scale_schedule(2.0, 1.0, 0, 10.0, 12)?;
    let eps = s.epsilons(1.0);
    let norm = s.normalized_scales();
    println!("{:>3} {:>14} {:>10} {:>14} {:>10}", "k", "L_k", "L_k/2^kL0", "a_k", "eps_k");
    for k in 0..=s.k_max {
        println!("{k:>3} {:>14.4} {:>10.6} {:>14.4} {:>10.6}", s.scales[k], norm[k], s.a[k], eps[k]);
    }
    println!("product bound {:.6}, flags {:?}", s.product_bound, s.invariant_flags());
    Ok(())
}
