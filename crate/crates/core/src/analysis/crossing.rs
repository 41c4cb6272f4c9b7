//! Crossing probabilities `P(Q_L ↔ Q_{2L}^c in {φ ≥ h})` and the finite-size
//! critical level `ĥ_*(L)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{wilson_interval, Interval};
use crate::environments::{sample_gff_dirichlet, ScalarField};
use crate::error::{Error, Result};
use crate::lattice::{crossing_event, label_clusters, LatticeBox, OpenMask, UnionFind};
use crate::rng::RngStream;

/// Default threshold defining `ĥ_*(L)`.
pub const CRITICAL_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossingCurve {
    pub scale: usize,
    pub h_grid: Vec<f64>,
    pub probabilities: Vec<Interval>,
    /// Smallest grid level with crossing probability below the threshold.
    pub h_star: Option<f64>,
    pub threshold: f64,
    /// Per-replica bottleneck levels.
    pub bottlenecks: Vec<f64>,
    pub box_radius: usize,
}

/// Box of ℓ∞ radius `2L + 1 + margin` around the origin.
pub fn crossing_box(dim: usize, scale: usize, margin: usize) -> Result<LatticeBox> {
    LatticeBox::centered(&vec![0; dim], 2 * scale + 1 + margin)
}

/// Largest `h` for which `Q_L ↔ Q_{2L}^c` inside `{φ ≥ h}`, or `−∞`.
///
/// Any path leaving `Q_{2L}` first meets the shell `|x|∞ = 2L+1`, so only
/// vertices with `|x|∞ ≤ 2L+1` matter. Vertices are added in decreasing
/// order of `φ`; the level at which the two sets first share a cluster is
/// the bottleneck.
pub fn crossing_bottleneck(field: &ScalarField, scale: usize) -> Result<f64> {
    let lat = &field.lattice;
    let d = lat.dim();
    let outer = (2 * scale + 1) as i64;
    let mut inside = Vec::new();
    let mut role = vec![0u8; lat.num_vertices()];
    for v in 0..lat.num_vertices() {
        let r = lat.coords(v).iter().map(|c| c.abs()).max().unwrap_or(0);
        if r <= outer {
            inside.push(v);
            role[v] = if r <= scale as i64 {
                1
            } else if r == outer {
                2
            } else {
                3
            };
        }
    }
    let expect = (2 * outer as usize + 1).pow(d as u32);
    if inside.len() != expect {
        return Err(Error::InvalidGeometry(format!("box does not contain Q_(2L+1) for L = {scale}")));
    }
    inside.sort_by(|&a, &b| field.values[b].total_cmp(&field.values[a]).then(a.cmp(&b)));
    let mut uf = UnionFind::new(lat.num_vertices());
    let mut added = vec![false; lat.num_vertices()];
    // per-root flags: bit 0 touches Q_L, bit 1 touches the shell
    let mut flags = vec![0u8; lat.num_vertices()];
    for &v in &inside {
        added[v] = true;
        flags[v] = match role[v] {
            1 => 1,
            2 => 2,
            _ => 0,
        };
        let mut root = uf.find(v);
        let mut merged = flags[root];
        lat.for_each_neighbor(v, |u, _| {
            if added[u] {
                let ru = uf.find(u);
                if ru != root {
                    merged |= flags[ru];
                    uf.union(root, ru);
                    root = uf.find(v);
                }
            }
        });
        flags[root] = merged;
        if merged == 3 {
            return Ok(field.values[v]);
        }
    }
    Ok(f64::NEG_INFINITY)
}

/// Direct crossing test at level `h` through [`label_clusters`].
pub fn crossing_at(field: &ScalarField, scale: usize, h: f64) -> Result<bool> {
    let lat = &field.lattice;
    let outer = (2 * scale + 1) as i64;
    let open: Vec<bool> = field
        .values
        .iter()
        .enumerate()
        .map(|(v, &p)| p >= h && lat.coords(v).iter().all(|c| c.abs() <= outer))
        .collect();
    let labels = label_clusters(lat, OpenMask::Vertices(&open))?;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for v in 0..lat.num_vertices() {
        let r = lat.coords(v).iter().map(|c| c.abs()).max().unwrap_or(0);
        if r <= scale as i64 {
            a.push(v);
        } else if r == outer {
            b.push(v);
        }
    }
    Ok(crossing_event(&labels, &a, &b))
}

pub fn curve_from_bottlenecks(scale: usize, h_grid: &[f64], bottlenecks: Vec<f64>, threshold: f64, confidence: f64, box_radius: usize) -> Result<CrossingCurve> {
    let n = bottlenecks.len() as u64;
    let probabilities = h_grid
        .iter()
        .map(|&h| wilson_interval(bottlenecks.iter().filter(|&&b| b >= h).count() as u64, n, confidence))
        .collect::<Result<Vec<_>>>()?;
    let h_star = h_grid.iter().zip(&probabilities).find(|(_, p)| p.estimate < threshold).map(|(h, _)| *h);
    Ok(CrossingCurve { scale, h_grid: h_grid.to_vec(), probabilities, h_star, threshold, bottlenecks, box_radius })
}

/// Crossing curves for every scale of `l_grid` from independent GFF samples.
pub fn crossing_curve(
    dim: usize,
    l_grid: &[usize],
    h_grid: &[f64],
    margin: usize,
    replicas: usize,
    confidence: f64,
    stream: RngStream,
) -> Result<Vec<CrossingCurve>> {
    if l_grid.is_empty() || h_grid.is_empty() {
        return Err(Error::InvalidParameter("crossing grids must be non-empty".into()));
    }
    if replicas == 0 {
        return Err(Error::InvalidParameter("replicas must be >= 1".into()));
    }
    let mut h_sorted = h_grid.to_vec();
    h_sorted.sort_by(f64::total_cmp);
    l_grid
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let lat = crossing_box(dim, l, margin)?;
            let bottlenecks = (0..replicas)
                .into_par_iter()
                .map(|r| {
                    let field = sample_gff_dirichlet(&lat, stream.child(i as u64).child(r as u64))?;
                    crossing_bottleneck(&field, l)
                })
                .collect::<Result<Vec<_>>>()?;
            curve_from_bottlenecks(l, &h_sorted, bottlenecks, CRITICAL_THRESHOLD, confidence, 2 * l + 1 + margin)
        })
        .collect()
}
