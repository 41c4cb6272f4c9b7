use serde::{Deserialize, Serialize};

use super::env::ConductanceEnvironment;
use crate::error::{Error, Result};
use crate::solver::{pcg, DEFAULT_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Walk absorbed on leaving the box.
    Absorbing,
    /// Exterior conductances ignored (reflecting box); needs `h > 0`.
    Free,
}

/// `x ↦ g(x, y)`, the expected time at `y` per unit speed before the walk
/// from `x` is killed or absorbed.
#[derive(Debug, Clone)]
pub struct GreenColumn {
    pub target: usize,
    pub values: Vec<f64>,
    pub relative_residual: f64,
    pub iterations: usize,
    pub boundary: Boundary,
}

/// Solves `θ(−L) g = δ_y`, i.e. `Σ_z a(x,z)(g(x) − g(z)) + h κ(x) g(x) = 1{x=y}`.
///
/// The solution is the occupation density `∫ P_x[X_t = y] dt / θ(y)`,
/// symmetric in `(x, y)` for every speed measure.
pub fn solve_green(env: &ConductanceEnvironment, y: usize, boundary: Boundary) -> Result<GreenColumn> {
    let n = env.lattice.num_vertices();
    if y >= n {
        return Err(Error::InvalidGeometry(format!("target index {y} outside the box")));
    }
    if boundary == Boundary::Free && env.h == 0.0 {
        return Err(Error::InvalidParameter("h = 0 with a free boundary gives a singular system".into()));
    }
    let killing = env.killing_rates();
    let op = env.operator(&killing, boundary == Boundary::Absorbing);
    let mut rhs = vec![0.0; n];
    rhs[y] = 1.0;
    let sol = pcg(&op, &rhs, DEFAULT_TOLERANCE, 20 * n + 1000)?;
    Ok(GreenColumn {
        target: y,
        // CG may leave tiny negative round-off far from the source
        values: sol.x.into_iter().map(|g| g.max(0.0)).collect(),
        relative_residual: sol.relative_residual,
        iterations: sol.iterations,
        boundary,
    })
}
