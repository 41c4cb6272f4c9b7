//! Exact first-passage distances by Dijkstra's algorithm.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::environments::{PassageWeights, WeightMode};
use crate::error::{Error, Result};
use crate::lattice::LatticeBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricTag {
    FppEdge,
    FppVertex,
    Chemical,
    DTheta,
    DKappa,
}

/// Per-vertex distances from a source set; unreachable vertices hold `∞`.
#[derive(Debug, Clone)]
pub struct DistanceMap {
    pub lattice: LatticeBox,
    pub sources: Vec<usize>,
    pub distances: Vec<f64>,
    pub metric: MetricTag,
}

impl DistanceMap {
    pub fn get(&self, v: usize) -> f64 {
        self.distances[v]
    }

    pub fn at(&self, x: &[i64]) -> Option<f64> {
        self.lattice.index_of(x).map(|v| self.distances[v])
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    vertex: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // min-heap on distance, ties broken by the smaller dense index
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra over passage weights.
///
/// Edge mode: `d(x,y) = inf_π Σ_{e∈π} t_e`. Vertex mode charges every vertex
/// on the path including both endpoints, so `d(x,x) = t_x`; this lies
/// between the edge-mode distance of the half-sum weights and twice it.
/// Infinite weights are never relaxed. When `stop_at` is given the search
/// ends once all of those vertices are settled; other entries may then be
/// upper bounds or `∞`.
pub fn dijkstra(weights: &PassageWeights, sources: &[usize], stop_at: Option<&[usize]>) -> Result<Vec<f64>> {
    let lat = &weights.lattice;
    let n = lat.num_vertices();
    if sources.is_empty() {
        return Err(Error::InvalidParameter("source set is empty".into()));
    }
    if let Some(&bad) = sources.iter().find(|&&s| s >= n) {
        return Err(Error::InvalidGeometry(format!("source index {bad} outside the box")));
    }
    if let Some(bad) = weights.values.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::InvalidParameter(format!("negative passage time {bad}")));
    }
    if weights.values.iter().all(|&w| w == 0.0 || w == 1.0 || w == f64::INFINITY) {
        return Ok(zero_one_search(weights, sources, stop_at));
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        let d0 = match weights.mode {
            WeightMode::Edge => 0.0,
            WeightMode::Vertex => weights.values[s],
        };
        if d0 < dist[s] {
            dist[s] = d0;
            heap.push(Entry { dist: d0, vertex: s });
        }
    }
    let mut pending = stop_at.map(|t| {
        let mut t = t.to_vec();
        t.sort_unstable();
        t.dedup();
        t
    });
    while let Some(Entry { dist: d, vertex: v }) = heap.pop() {
        if done[v] || d > dist[v] {
            continue;
        }
        done[v] = true;
        if let Some(p) = pending.as_mut() {
            if let Ok(i) = p.binary_search(&v) {
                p.remove(i);
                if p.is_empty() {
                    break;
                }
            }
        }
        lat.for_each_neighbor(v, |u, e| {
            if done[u] {
                return;
            }
            let w = match weights.mode {
                WeightMode::Edge => weights.values[e],
                WeightMode::Vertex => weights.values[u],
            };
            if w.is_infinite() {
                return;
            }
            let nd = d + w;
            if nd < dist[u] {
                dist[u] = nd;
                heap.push(Entry { dist: nd, vertex: u });
            }
        });
    }
    Ok(dist)
}

// Weights in {0, 1, ∞}: a two-ended queue replaces the heap. Distances are
// identical to the heap search; only the work differs.
fn zero_one_search(weights: &PassageWeights, sources: &[usize], stop_at: Option<&[usize]>) -> Vec<f64> {
    let lat = &weights.lattice;
    let n = lat.num_vertices();
    let mut dist = vec![u32::MAX; n];
    let mut done = vec![false; n];
    let mut queue = VecDeque::new();
    for &s in sources {
        let d0 = match weights.mode {
            WeightMode::Edge => 0,
            WeightMode::Vertex if weights.values[s].is_infinite() => continue,
            WeightMode::Vertex => weights.values[s] as u32,
        };
        if d0 < dist[s] {
            dist[s] = d0;
            if d0 == 0 {
                queue.push_front(s);
            } else {
                queue.push_back(s);
            }
        }
    }
    let mut pending = stop_at.map(|t| {
        let mut seen = vec![false; n];
        let mut count = 0usize;
        for &v in t {
            if v < n && !seen[v] {
                seen[v] = true;
                count += 1;
            }
        }
        (seen, count)
    });
    while let Some(v) = queue.pop_front() {
        if done[v] {
            continue;
        }
        done[v] = true;
        if let Some((seen, count)) = pending.as_mut() {
            if seen[v] {
                *count -= 1;
                if *count == 0 {
                    break;
                }
            }
        }
        let d = dist[v];
        lat.for_each_neighbor(v, |u, e| {
            if done[u] {
                return;
            }
            let w = match weights.mode {
                WeightMode::Edge => weights.values[e],
                WeightMode::Vertex => weights.values[u],
            };
            if w.is_infinite() {
                return;
            }
            let nd = d + w as u32;
            if nd < dist[u] {
                dist[u] = nd;
                if w == 0.0 {
                    queue.push_front(u);
                } else {
                    queue.push_back(u);
                }
            }
        });
    }
    dist.into_iter()
        .map(|d| if d == u32::MAX { f64::INFINITY } else { d as f64 })
        .collect()
}

pub fn fpp_distances(weights: &PassageWeights, sources: &[usize]) -> Result<DistanceMap> {
    let distances = dijkstra(weights, sources, None)?;
    Ok(DistanceMap {
        lattice: weights.lattice.clone(),
        sources: sources.to_vec(),
        distances,
        metric: match weights.mode {
            WeightMode::Edge => MetricTag::FppEdge,
            WeightMode::Vertex => MetricTag::FppVertex,
        },
    })
}

/// `d(source, target)` with early termination.
pub fn fpp_point_distance(weights: &PassageWeights, source: usize, target: usize) -> Result<f64> {
    if target >= weights.lattice.num_vertices() {
        return Err(Error::InvalidGeometry(format!("target index {target} outside the box")));
    }
    Ok(dijkstra(weights, &[source], Some(&[target]))?[target])
}

/// `B(t) = {x : d(source, x) ≤ t}` as dense indices.
pub fn shape_ball(weights: &PassageWeights, source: usize, t: f64) -> Result<Vec<usize>> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter("ball radius must be >= 0".into()));
    }
    let d = dijkstra(weights, &[source], None)?;
    Ok(ball_from_distances(&d, t))
}

pub fn ball_from_distances(distances: &[f64], t: f64) -> Vec<usize> {
    distances
        .iter()
        .enumerate()
        .filter(|(_, &d)| d <= t)
        .map(|(v, _)| v)
        .collect()
}
