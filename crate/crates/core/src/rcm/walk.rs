use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::env::ConductanceEnvironment;
use crate::error::{Error, Result};
use crate::rng::{exponential, RngStream};

/// Walks per independent stream block; results merge block by block.
pub(crate) const BLOCK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WalkEnd {
    Horizon,
    Killed,
    Exited,
    /// Vertex with zero total rate: the walk sits there until the horizon.
    Frozen,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// `vertices[0]` is the start; `jump_times[i]` is when the walk entered `vertices[i+1]`.
    pub vertices: Vec<usize>,
    pub jump_times: Vec<f64>,
    pub end: WalkEnd,
    /// Time of killing or exit, or the horizon.
    pub end_time: f64,
}

/// Per-vertex cumulative rates `a(x, y_0), …, a(x, y_{2d−1}), ext(x), h κ(x)`.
pub(crate) struct JumpTable {
    width: usize,
    neighbors: Vec<u32>,
    cumulative: Vec<f64>,
    theta: Vec<f64>,
}

enum Step {
    Move(usize),
    Exit,
    Kill,
}

impl JumpTable {
    pub(crate) fn new(env: &ConductanceEnvironment) -> Self {
        let lat = &env.lattice;
        let d = lat.dim();
        let width = 2 * d + 2;
        let n = lat.num_vertices();
        let mut neighbors = vec![u32::MAX; n * 2 * d];
        let mut cumulative = vec![0.0; n * width];
        for v in 0..n {
            let mut acc = 0.0;
            for axis in 0..d {
                for (k, forward) in [(0, false), (1, true)] {
                    let slot = 2 * axis + k;
                    if let Some(u) = lat.step(v, axis, forward) {
                        let e = lat.edge_between(v, u).unwrap();
                        acc += env.conductance[e];
                        neighbors[v * 2 * d + slot] = u as u32;
                    }
                    cumulative[v * width + slot] = acc;
                }
            }
            acc += env.exterior[v];
            cumulative[v * width + 2 * d] = acc;
            acc += env.h * env.kappa[v];
            cumulative[v * width + 2 * d + 1] = acc;
        }
        Self { width, neighbors, cumulative, theta: env.theta.clone() }
    }

    #[inline]
    fn rate(&self, v: usize) -> f64 {
        self.cumulative[v * self.width + self.width - 1] / self.theta[v]
    }

    #[inline]
    fn choose<R: Rng>(&self, v: usize, rng: &mut R) -> Step {
        let row = &self.cumulative[v * self.width..(v + 1) * self.width];
        let total = row[self.width - 1];
        let x = rng.gen::<f64>() * total;
        let k = row.partition_point(|&c| c <= x).min(self.width - 1);
        let jumps = self.width - 2;
        if k < jumps {
            Step::Move(self.neighbors[v * jumps + k] as usize)
        } else if k == jumps {
            Step::Exit
        } else {
            Step::Kill
        }
    }

    /// Runs one walk from `x`, calling `visit(v, holding)` for every
    /// stay (truncated at the horizon). Returns the final state.
    pub(crate) fn run<R: Rng>(&self, x: usize, horizon: f64, rng: &mut R, mut visit: impl FnMut(usize, f64)) -> (usize, WalkEnd, f64) {
        let mut v = x;
        let mut t = 0.0;
        loop {
            let rate = self.rate(v);
            if rate == 0.0 {
                visit(v, horizon - t);
                return (v, WalkEnd::Frozen, horizon);
            }
            let hold = exponential(rng, rate);
            if t + hold >= horizon {
                visit(v, horizon - t);
                return (v, WalkEnd::Horizon, horizon);
            }
            visit(v, hold);
            t += hold;
            match self.choose(v, rng) {
                Step::Move(u) => v = u,
                Step::Exit => return (v, WalkEnd::Exited, t),
                Step::Kill => return (v, WalkEnd::Killed, t),
            }
        }
    }
}

/// Continuous-time walk: at `x` it waits an exponential time of rate
/// `(μ(x) + ext(x) + hκ(x))/θ(x)`, then jumps to `y` with probability
/// proportional to `a(x,y)`, leaves the box, or is killed.
pub fn simulate_killed_walk(env: &ConductanceEnvironment, x: usize, horizon: f64, stream: RngStream) -> Result<Trajectory> {
    if x >= env.lattice.num_vertices() {
        return Err(Error::InvalidGeometry(format!("start index {x} outside the box")));
    }
    if !(horizon >= 0.0) {
        return Err(Error::InvalidParameter("horizon must be >= 0".into()));
    }
    let table = JumpTable::new(env);
    let mut rng = stream.generator();
    let mut vertices = vec![x];
    let mut jump_times = Vec::new();
    let mut clock = 0.0;
    let (_, end, end_time) = table.run(x, horizon, &mut rng, |v, hold| {
        if v != *vertices.last().unwrap() {
            vertices.push(v);
            jump_times.push(clock);
        }
        clock += hold;
    });
    Ok(Trajectory { vertices, jump_times, end, end_time })
}

/// Monte Carlo estimate of the Green column `g(x, ·)`.
#[derive(Debug, Clone)]
pub struct MonteCarloGreen {
    pub source: usize,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub walks: usize,
}

/// Occupation time at each `y` divided by `θ(y)`, averaged over `walks`
/// independent walks from `x` run until killing or exit.
pub fn green_monte_carlo(env: &ConductanceEnvironment, x: usize, walks: usize, stream: RngStream) -> Result<MonteCarloGreen> {
    if x >= env.lattice.num_vertices() {
        return Err(Error::InvalidGeometry(format!("start index {x} outside the box")));
    }
    if walks < 2 {
        return Err(Error::InvalidParameter("at least two walks are needed".into()));
    }
    let table = JumpTable::new(env);
    if (0..env.lattice.num_vertices()).any(|v| table.rate(v) == 0.0) {
        return Err(Error::Degenerate("a vertex has zero total rate; the Green function is infinite".into()));
    }
    let n = env.lattice.num_vertices();
    let blocks = walks.div_ceil(BLOCK);
    let partial = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let count = BLOCK.min(walks - b * BLOCK);
            let mut rng = stream.child(b as u64).generator();
            let mut sum = vec![0.0; n];
            let mut sq = vec![0.0; n];
            let mut occ = vec![0.0; n];
            let mut touched = Vec::new();
            for _ in 0..count {
                table.run(x, f64::INFINITY, &mut rng, |v, hold| {
                    if occ[v] == 0.0 {
                        touched.push(v);
                    }
                    occ[v] += hold;
                });
                for &v in &touched {
                    sum[v] += occ[v];
                    sq[v] += occ[v] * occ[v];
                    occ[v] = 0.0;
                }
                touched.clear();
            }
            (sum, sq)
        })
        .collect::<Vec<_>>();
    let mut sum = vec![0.0; n];
    let mut sq = vec![0.0; n];
    for (s, q) in &partial {
        for v in 0..n {
            sum[v] += s[v];
            sq[v] += q[v];
        }
    }
    let w = walks as f64;
    let mean: Vec<f64> = (0..n).map(|v| sum[v] / w / env.theta[v]).collect();
    let stderr = (0..n)
        .map(|v| {
            let m = sum[v] / w;
            let var = ((sq[v] - w * m * m) / (w - 1.0)).max(0.0);
            (var / w).sqrt() / env.theta[v]
        })
        .collect();
    Ok(MonteCarloGreen { source: x, mean, stderr, walks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeBox;

    #[test]
    fn huge_killing_stops_before_first_jump() {
        let b = LatticeBox::cube(3, 5).unwrap();
        let env = ConductanceEnvironment::new(
            b.clone(),
            vec![1e-6; b.num_edges()],
            vec![0.0; b.num_vertices()],
            vec![1.0; b.num_vertices()],
            vec![1.0; b.num_vertices()],
            1.0,
        )
        .unwrap();
        let killed = (0..200)
            .filter(|&r| {
                let t = simulate_killed_walk(&env, 62, 1e9, RngStream::new(1, r)).unwrap();
                t.end == WalkEnd::Killed && t.vertices.len() == 1
            })
            .count();
        assert!(killed >= 199);
    }

    #[test]
    fn unit_walk_holding_time() {
        let b = LatticeBox::cube(3, 9).unwrap();
        let env = ConductanceEnvironment::homogeneous(&b, 1.0, 1.0, 0.0).unwrap();
        let mut holds = Vec::new();
        for r in 0..4000 {
            let t = simulate_killed_walk(&env, b.index_of(&[4, 4, 4]).unwrap(), 1e9, RngStream::new(2, r)).unwrap();
            holds.push(t.jump_times.first().copied().unwrap_or(t.end_time));
        }
        let m = holds.iter().sum::<f64>() / holds.len() as f64;
        // mean 1/6, standard error ≈ (1/6)/√4000
        assert!((m - 1.0 / 6.0).abs() < 4.0 * (1.0 / 6.0) / 4000f64.sqrt(), "{m}");
    }

    #[test]
    fn trajectory_bookkeeping() {
        let b = LatticeBox::cube(2, 4).unwrap();
        let env = ConductanceEnvironment::homogeneous(&b, 1.0, 1.0, 0.0).unwrap();
        let t = simulate_killed_walk(&env, 5, 3.0, RngStream::new(0, 0)).unwrap();
        assert_eq!(t.vertices.len(), t.jump_times.len() + 1);
        assert!(t.jump_times.windows(2).all(|w| w[0] < w[1]));
        for w in t.vertices.windows(2) {
            assert!(b.neighbors(w[0]).contains(&w[1]));
        }
        assert!(t.end_time <= 3.0);
        assert!(simulate_killed_walk(&env, 99, 1.0, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn frozen_vertex_is_flagged() {
        let b = LatticeBox::cube(1, 2).unwrap();
        let env = ConductanceEnvironment::new(b, vec![0.0], vec![0.0, 0.0], vec![1.0; 2], vec![1.0; 2], 0.0).unwrap();
        let t = simulate_killed_walk(&env, 0, 2.0, RngStream::new(0, 0)).unwrap();
        assert_eq!(t.end, WalkEnd::Frozen);
        assert!(green_monte_carlo(&env, 0, 10, RngStream::new(0, 0)).is_err());
    }
}
