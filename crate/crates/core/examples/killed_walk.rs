//! Killed random walk: Monte Carlo Green function against the linear solve
//! on a 5³ box, and the time integral of the exact heat kernel.

use fpplab::lattice::LatticeBox;
use fpplab::rcm::{green_monte_carlo, solve_green, Boundary, ConductanceEnvironment, ExactHeatKernel};
use fpplab::rng::RngStream;

fn main() -> fpplab::Result<()> {
    let lat = LatticeBox::cube(3, 5)?;
    let env = ConductanceEnvironment::homogeneous(&lat, 1.0, 1.0, 0.3)?;
    let x = lat.index_of(&[2, 2, 2]).unwrap();
    let exact = solve_green(&env, x, Boundary::Absorbing)?;
    let mc = green_monte_carlo(&env, x, 20_000, RngStream::new(8, 0))?;
    let (integral, tail) = ExactHeatKernel::new(&env)?.time_integral(x, 1e-10)?;
    for y in [x, lat.index_of(&[3, 2, 2]).unwrap(), lat.index_of(&[4, 4, 2]).unwrap()] {
        println!(
            "y = {:?}: solve {:.6}, walks {:.6} ± {:.6}, ∫p dt {:.6}",
            lat.coords(y),
            exact.values[y],
            mc.mean[y],
            mc.stderr[y],
            integral[y]
        );
    }
    println!("quadrature tail bound {tail:.2e}");
    Ok(())
}
