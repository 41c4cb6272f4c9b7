//! Normalized balls `B(t)/t` and their convergence.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distance::{ball_from_distances, dijkstra};
use super::estimate::WeightModel;
use crate::analysis::stats::{mean, standard_error};
use crate::environments::PassageWeights;
use crate::error::{Error, Result};
use crate::lattice::LatticeBox;
use crate::rng::RngStream;

/// Hausdorff distance between `A/ta` and `B/tb` for lattice point sets
/// `A`, `B` of one box, as subsets of `R^d` with the Euclidean norm.
pub fn normalized_hausdorff(lattice: &LatticeBox, a: &[usize], ta: f64, b: &[usize], tb: f64) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Degenerate("empty ball".into()));
    }
    let mut in_a = vec![false; lattice.num_vertices()];
    let mut in_b = vec![false; lattice.num_vertices()];
    a.iter().for_each(|&v| in_a[v] = true);
    b.iter().for_each(|&v| in_b[v] = true);
    let ab = directed_hausdorff(lattice, a, ta, &in_b, tb);
    let ba = directed_hausdorff(lattice, b, tb, &in_a, ta);
    Ok(ab.max(ba))
}

/// `sup_{x∈A} dist(x/ta, B/tb)`, searching lattice shells of growing
/// ℓ∞ radius around the rescaled point until no closer member can exist.
fn directed_hausdorff(lattice: &LatticeBox, a: &[usize], ta: f64, in_b: &[bool], tb: f64) -> f64 {
    let d = lattice.dim();
    let offset = lattice.offset();
    let sides = lattice.sides();
    let mut worst: f64 = 0.0;
    let mut centre = vec![0i64; d];
    let mut cursor = vec![0i64; d];
    for &v in a {
        let x = lattice.coords(v);
        // x/ta = y/tb  ⇒  y = x·tb/ta
        let target: Vec<f64> = x.iter().map(|&c| c as f64 * tb / ta).collect();
        for k in 0..d {
            centre[k] = target[k].round() as i64;
        }
        let mut best = f64::INFINITY;
        let max_r = (0..d)
            .map(|k| (centre[k] - offset[k]).abs().max((offset[k] + sides[k] as i64 - 1 - centre[k]).abs()))
            .max()
            .unwrap_or(0);
        for r in 0..=max_r {
            // every point on shell r is at least (r − ½) away in the sup norm
            let floor = (r as f64 - 0.5).max(0.0) / tb;
            if floor >= best {
                break;
            }
            for_each_on_shell(&centre, r, &mut cursor, &mut |y| {
                let inside = y.iter().enumerate().all(|(k, &c)| c >= offset[k] && c < offset[k] + sides[k] as i64);
                if !inside {
                    return;
                }
                let idx = lattice.index_of(y).unwrap();
                if in_b[idx] {
                    let dist = y
                        .iter()
                        .zip(&target)
                        .map(|(&c, t)| (c as f64 - t).powi(2))
                        .sum::<f64>()
                        .sqrt()
                        / tb;
                    best = best.min(dist);
                }
            });
        }
        if best > worst {
            worst = best;
        }
    }
    worst
}

fn for_each_on_shell(centre: &[i64], r: i64, cursor: &mut [i64], f: &mut impl FnMut(&[i64])) {
    fn rec(centre: &[i64], r: i64, k: usize, on_shell: bool, cursor: &mut [i64], f: &mut impl FnMut(&[i64])) {
        if k == centre.len() {
            if on_shell {
                f(cursor);
            }
            return;
        }
        for delta in -r..=r {
            // the last axis must land on the shell if no earlier axis did
            if k + 1 == centre.len() && !on_shell && delta.abs() != r {
                continue;
            }
            cursor[k] = centre[k] + delta;
            rec(centre, r, k + 1, on_shell || delta.abs() == r, cursor, f);
        }
    }
    rec(centre, r, 0, false, cursor, f);
}

/// Fraction of sampled boundary-pair midpoints lying outside the ball.
///
/// Midpoints of lattice points may be half-integer; each coordinate is
/// rounded toward the source, so a convex ball scores exactly zero.
pub fn convexity_defect(lattice: &LatticeBox, ball: &[usize], source: usize, pairs: usize, stream: RngStream) -> Result<f64> {
    let mut in_ball = vec![false; lattice.num_vertices()];
    ball.iter().for_each(|&v| in_ball[v] = true);
    let boundary: Vec<usize> = ball
        .iter()
        .copied()
        .filter(|&v| {
            let mut edge = lattice.exterior_degree(v) > 0;
            lattice.for_each_neighbor(v, |u, _| edge |= !in_ball[u]);
            edge
        })
        .collect();
    if boundary.len() < 2 {
        return Ok(0.0);
    }
    let s = lattice.coords(source);
    let mut rng = stream.generator();
    let mut outside = 0usize;
    for _ in 0..pairs {
        let p = lattice.coords(boundary[rng.gen_range(0..boundary.len())]);
        let q = lattice.coords(boundary[rng.gen_range(0..boundary.len())]);
        let mid: Vec<i64> = (0..p.len())
            .map(|k| {
                let twice = p[k] + q[k];
                if twice % 2 == 0 {
                    twice / 2
                } else if 2 * s[k] < twice {
                    twice.div_euclid(2)
                } else {
                    twice.div_euclid(2) + 1
                }
            })
            .collect();
        match lattice.index_of(&mid) {
            Some(m) if in_ball[m] => {}
            _ => outside += 1,
        }
    }
    Ok(outside as f64 / pairs as f64)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapeReport {
    pub t_levels: Vec<f64>,
    /// Per consecutive pair `(t_i, t_{i+1})`: mean Hausdorff gap over replicas.
    pub hausdorff_mean: Vec<f64>,
    pub hausdorff_stderr: Vec<f64>,
    /// `hausdorff[r][i]` for replica `r`.
    pub hausdorff: Vec<Vec<f64>>,
    pub convexity_defect: Vec<f64>,
    pub box_radius: usize,
    /// Replicas whose largest ball reached the box boundary.
    pub truncated: usize,
}

/// Hausdorff gaps between normalized balls at consecutive `t` on one realization.
pub fn shape_gaps(weights: &PassageWeights, source: usize, t_levels: &[f64]) -> Result<(Vec<f64>, Vec<Vec<usize>>, bool)> {
    let dist = dijkstra(weights, &[source], None)?;
    let balls: Vec<Vec<usize>> = t_levels.iter().map(|&t| ball_from_distances(&dist, t)).collect();
    if balls.iter().any(|b| b.is_empty()) {
        return Err(Error::Degenerate("ball is empty (all distances infinite)".into()));
    }
    let lat = &weights.lattice;
    let truncated = balls.last().unwrap().iter().any(|&v| lat.exterior_degree(v) > 0);
    let gaps = (0..t_levels.len() - 1)
        .map(|i| normalized_hausdorff(lat, &balls[i], t_levels[i], &balls[i + 1], t_levels[i + 1]))
        .collect::<Result<Vec<_>>>()?;
    Ok((gaps, balls, truncated))
}

/// Replica means of the Hausdorff gaps between `B(t_i)/t_i` and
/// `B(t_{i+1})/t_{i+1}` on a box of ℓ∞ radius `box_radius` around the origin.
pub fn shape_convergence(
    model: &WeightModel,
    dim: usize,
    t_levels: &[f64],
    box_radius: usize,
    replicas: usize,
    stream: RngStream,
) -> Result<ShapeReport> {
    if t_levels.len() < 2 || t_levels[0] <= 0.0 || t_levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("t levels must be positive, increasing, at least two".into()));
    }
    if replicas == 0 {
        return Err(Error::InvalidParameter("replicas must be >= 1".into()));
    }
    model.validate()?;
    let lattice = LatticeBox::centered(&vec![0; dim], box_radius)?;
    let source = lattice.index_of(&vec![0; dim]).unwrap();
    let per_replica = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let w = model.sample(&lattice, stream.child(r as u64))?;
            let (gaps, balls, truncated) = shape_gaps(&w, source, t_levels)?;
            let defect = convexity_defect(&lattice, balls.last().unwrap(), source, 2000, stream.child(r as u64).child(1))?;
            Ok((gaps, defect, truncated))
        })
        .collect::<Result<Vec<_>>>()?;
    let k = t_levels.len() - 1;
    let hausdorff: Vec<Vec<f64>> = per_replica.iter().map(|p| p.0.clone()).collect();
    let column = |i: usize| hausdorff.iter().map(|h| h[i]).collect::<Vec<_>>();
    Ok(ShapeReport {
        t_levels: t_levels.to_vec(),
        hausdorff_mean: (0..k).map(|i| mean(&column(i))).collect(),
        hausdorff_stderr: (0..k).map(|i| standard_error(&column(i))).collect(),
        convexity_defect: per_replica.iter().map(|p| p.1).collect(),
        truncated: per_replica.iter().filter(|p| p.2).count(),
        hausdorff,
        box_radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::{IidLaw, WeightMode};

    fn brute_hausdorff(lat: &LatticeBox, a: &[usize], ta: f64, b: &[usize], tb: f64) -> f64 {
        let pts = |s: &[usize], t: f64| -> Vec<Vec<f64>> {
            s.iter().map(|&v| lat.coords(v).iter().map(|&c| c as f64 / t).collect()).collect()
        };
        let (pa, pb) = (pts(a, ta), pts(b, tb));
        let dir = |p: &[Vec<f64>], q: &[Vec<f64>]| {
            p.iter()
                .map(|x| {
                    q.iter()
                        .map(|y| x.iter().zip(y).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt())
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        };
        dir(&pa, &pb).max(dir(&pb, &pa))
    }

    #[test]
    fn shell_search_matches_brute_force() {
        let lat = LatticeBox::centered(&[0, 0], 8).unwrap();
        let w = crate::environments::sample_iid_weights(&lat, IidLaw::Exponential { rate: 1.0 }, WeightMode::Edge, RngStream::new(4, 0)).unwrap();
        let src = lat.index_of(&[0, 0]).unwrap();
        let d = dijkstra(&w, &[src], None).unwrap();
        for (ta, tb) in [(1.5, 3.0), (2.0, 4.5), (3.0, 3.5)] {
            let a = ball_from_distances(&d, ta);
            let b = ball_from_distances(&d, tb);
            let fast = normalized_hausdorff(&lat, &a, ta, &b, tb).unwrap();
            let slow = brute_hausdorff(&lat, &a, ta, &b, tb);
            assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
        }
    }

    #[test]
    fn unit_weights_converge_to_l1_ball() {
        let model = WeightModel::Iid { law: IidLaw::Constant { c: 1.0 }, mode: WeightMode::Edge };
        let t = [4.0, 8.0, 16.0];
        let rep = shape_convergence(&model, 2, &t, 20, 1, RngStream::new(0, 0)).unwrap();
        for (i, gap) in rep.hausdorff_mean.iter().enumerate() {
            assert!(*gap <= 2.0 * 2.0 / t[i], "gap {gap} at t={}", t[i]);
        }
        assert_eq!(rep.convexity_defect, vec![0.0]);
        assert_eq!(rep.truncated, 0);

        // constant c: same balls at t·c
        let model = WeightModel::Iid { law: IidLaw::Constant { c: 2.0 }, mode: WeightMode::Edge };
        let scaled = shape_convergence(&model, 2, &[8.0, 16.0, 32.0], 20, 1, RngStream::new(0, 0)).unwrap();
        for (a, b) in rep.hausdorff_mean.iter().zip(&scaled.hausdorff_mean) {
            assert!((a - 2.0 * b).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_inputs() {
        let model = WeightModel::Iid { law: IidLaw::Constant { c: 1.0 }, mode: WeightMode::Edge };
        assert!(shape_convergence(&model, 2, &[4.0], 5, 1, RngStream::new(0, 0)).is_err());
        assert!(shape_convergence(&model, 2, &[4.0, 2.0], 5, 1, RngStream::new(0, 0)).is_err());
        let lat = LatticeBox::cube(2, 3).unwrap();
        assert!(normalized_hausdorff(&lat, &[], 1.0, &[0], 1.0).is_err());
    }
}
