//! Finite boxes of Z^d: dense vertex/edge indexing, adjacency, boundaries
//! and cluster labeling.
//!
//! Vertices are indexed row-major with the last axis fastest. Edges are
//! stored canonically as `(e⁻, e⁺)` with `e⁺ − e⁻` a positive unit vector;
//! the edges pointing along axis `a` occupy one contiguous index range.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// An axis-aligned box `offset + [0, sides[0]) × … × [0, sides[d-1])` of Z^d.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeBox {
    sides: Vec<usize>,
    offset: Vec<i64>,
    strides: Vec<usize>,
    num_vertices: usize,
    /// First edge index of each axis block, plus the total at the end.
    edge_starts: Vec<usize>,
}

/// Vertex or edge percolation mask.
#[derive(Debug, Clone, Copy)]
pub enum OpenMask<'a> {
    Vertices(&'a [bool]),
    Edges(&'a [bool]),
}

impl LatticeBox {
    pub fn new(sides: &[usize], offset: &[i64]) -> Result<Self> {
        if sides.is_empty() {
            return Err(Error::InvalidGeometry("dimension must be at least 1".into()));
        }
        if offset.len() != sides.len() {
            return Err(Error::InvalidGeometry(format!(
                "offset has {} coordinates, box has dimension {}",
                offset.len(),
                sides.len()
            )));
        }
        if sides.iter().any(|&s| s == 0) {
            return Err(Error::InvalidGeometry("all side lengths must be >= 1".into()));
        }
        let d = sides.len();
        let mut strides = vec![1usize; d];
        let mut count: usize = 1;
        for a in (0..d).rev() {
            strides[a] = count;
            count = count
                .checked_mul(sides[a])
                .ok_or_else(|| Error::InvalidGeometry("vertex count overflows the index type".into()))?;
        }
        let mut edge_starts = Vec::with_capacity(d + 1);
        let mut total = 0usize;
        for &s in sides {
            edge_starts.push(total);
            // count / s * (s - 1) cannot overflow since it is <= count
            total = total
                .checked_add(count / s * (s - 1))
                .ok_or_else(|| Error::InvalidGeometry("edge count overflows the index type".into()))?;
        }
        edge_starts.push(total);
        Ok(Self {
            sides: sides.to_vec(),
            offset: offset.to_vec(),
            strides,
            num_vertices: count,
            edge_starts,
        })
    }

    /// Cube of side `side` with its lowest corner at the origin.
    pub fn cube(d: usize, side: usize) -> Result<Self> {
        Self::new(&vec![side; d], &vec![0; d])
    }

    /// `Q(center, radius)`: all points at ℓ∞ distance at most `radius` from `center`.
    pub fn centered(center: &[i64], radius: usize) -> Result<Self> {
        let offset: Vec<i64> = center.iter().map(|c| c - radius as i64).collect();
        Self::new(&vec![2 * radius + 1; center.len()], &offset)
    }

    /// The box grown by `margin` on both ends of every axis.
    pub fn inflate(&self, margin: usize) -> Result<Self> {
        let sides: Vec<usize> = self.sides.iter().map(|s| s + 2 * margin).collect();
        let offset: Vec<i64> = self.offset.iter().map(|o| o - margin as i64).collect();
        Self::new(&sides, &offset)
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[usize] {
        &self.sides
    }

    pub fn offset(&self) -> &[i64] {
        &self.offset
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edge_starts[self.dim()]
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Local (offset-free) coordinate of `v` along `axis`.
    #[inline]
    pub fn local_coord(&self, v: usize, axis: usize) -> usize {
        (v / self.strides[axis]) % self.sides[axis]
    }

    pub fn local_coords_into(&self, v: usize, out: &mut [usize]) {
        for (a, o) in out.iter_mut().enumerate().take(self.dim()) {
            *o = self.local_coord(v, a);
        }
    }

    /// Z^d coordinates of vertex `v`.
    pub fn coords(&self, v: usize) -> Vec<i64> {
        (0..self.dim())
            .map(|a| self.offset[a] + self.local_coord(v, a) as i64)
            .collect()
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.offset)
                .zip(&self.sides)
                .all(|((&xi, &o), &s)| xi >= o && xi < o + s as i64)
    }

    /// Dense index of the Z^d point `x`, if it lies in the box.
    pub fn index_of(&self, x: &[i64]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        Some(
            x.iter()
                .enumerate()
                .map(|(a, &xi)| (xi - self.offset[a]) as usize * self.strides[a])
                .sum(),
        )
    }

    /// Neighbor of `v` one step along `axis` in direction `+1` (`forward`) or `-1`.
    #[inline]
    pub fn step(&self, v: usize, axis: usize, forward: bool) -> Option<usize> {
        let c = self.local_coord(v, axis);
        if forward {
            (c + 1 < self.sides[axis]).then(|| v + self.strides[axis])
        } else {
            (c > 0).then(|| v - self.strides[axis])
        }
    }

    /// Calls `f(neighbor, edge)` for every in-box nearest neighbor of `v`.
    #[inline]
    pub fn for_each_neighbor(&self, v: usize, mut f: impl FnMut(usize, usize)) {
        for a in 0..self.dim() {
            let c = self.local_coord(v, a);
            if c > 0 {
                let u = v - self.strides[a];
                f(u, self.edge_along(u, a, c - 1));
            }
            if c + 1 < self.sides[a] {
                f(v + self.strides[a], self.edge_along(v, a, c));
            }
        }
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(2 * self.dim());
        self.for_each_neighbor(v, |u, _| out.push(u));
        out
    }

    /// Number of Z^d neighbors of `v` that lie outside the box.
    pub fn exterior_degree(&self, v: usize) -> usize {
        (0..self.dim())
            .map(|a| {
                let c = self.local_coord(v, a);
                usize::from(c == 0) + usize::from(c + 1 == self.sides[a])
            })
            .sum()
    }

    // Edge `(lower, lower + e_axis)` given the local coordinate of `lower` on `axis`.
    #[inline]
    fn edge_along(&self, lower: usize, axis: usize, c: usize) -> usize {
        // Index of `lower` inside the reduced box whose side on `axis` is one shorter:
        // high = coordinates on axes before `axis`, low = on and after.
        let high = lower / (self.strides[axis] * self.sides[axis]);
        let low = lower % self.strides[axis];
        let reduced = (high * (self.sides[axis] - 1) + c) * self.strides[axis] + low;
        self.edge_starts[axis] + reduced
    }

    /// Edge from `v` to `v + e_axis`, if both endpoints are in the box.
    pub fn edge_forward(&self, v: usize, axis: usize) -> Option<usize> {
        let c = self.local_coord(v, axis);
        (c + 1 < self.sides[axis]).then(|| self.edge_along(v, axis, c))
    }

    /// Canonical endpoints `(e⁻, e⁺)` of edge `e`.
    pub fn edge_endpoints(&self, e: usize) -> (usize, usize) {
        let axis = self.edge_axis(e);
        let r = e - self.edge_starts[axis];
        let short = self.sides[axis] - 1;
        let low = r % self.strides[axis];
        let rest = r / self.strides[axis];
        let c = rest % short;
        let high = rest / short;
        let lower = (high * self.sides[axis] + c) * self.strides[axis] + low;
        (lower, lower + self.strides[axis])
    }

    pub fn edge_axis(&self, e: usize) -> usize {
        debug_assert!(e < self.num_edges());
        self.edge_starts[1..].partition_point(|&s| s <= e)
    }

    /// Index of the edge joining `u` and `v`, if they are nearest neighbors.
    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        let diff = hi - lo;
        let axis = self.strides.iter().position(|&s| s == diff)?;
        // a stride match can still wrap across a row when the side along `axis` is exceeded
        if self.local_coord(lo, axis) + 1 != self.local_coord(hi, axis) {
            return None;
        }
        for a in 0..self.dim() {
            if a != axis && self.local_coord(lo, a) != self.local_coord(hi, a) {
                return None;
            }
        }
        self.edge_forward(lo, axis)
    }

    /// ∂_int: vertices with at least one Z^d neighbor outside the box.
    pub fn internal_boundary(&self) -> Vec<usize> {
        (0..self.num_vertices)
            .filter(|&v| self.exterior_degree(v) > 0)
            .collect()
    }

    /// ∂_out: points outside the box adjacent to it, as Z^d coordinates.
    pub fn outer_boundary(&self) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        for v in 0..self.num_vertices {
            let x = self.coords(v);
            for a in 0..self.dim() {
                let c = self.local_coord(v, a);
                if c == 0 {
                    let mut y = x.clone();
                    y[a] -= 1;
                    out.push(y);
                }
                if c + 1 == self.sides[a] {
                    let mut y = x.clone();
                    y[a] += 1;
                    out.push(y);
                }
            }
        }
        // corner points are reached from several faces only when d >= 1 sides are 1 wide
        out.sort();
        out.dedup();
        out
    }

    /// Vertices of the box whose Z^d point lies in `other`.
    pub fn vertices_in(&self, other: &LatticeBox) -> Vec<usize> {
        (0..self.num_vertices)
            .filter(|&v| other.contains(&self.coords(v)))
            .collect()
    }
}

/// Builds a box of dimension `d`, checking that `sides` and `offset` agree with it.
pub fn build_box(d: usize, sides: &[usize], offset: &[i64]) -> Result<LatticeBox> {
    if d == 0 {
        return Err(Error::InvalidGeometry("dimension must be at least 1".into()));
    }
    if sides.len() != d {
        return Err(Error::InvalidGeometry(format!(
            "expected {d} side lengths, got {}",
            sides.len()
        )));
    }
    LatticeBox::new(sides, offset)
}

/// `|x − y|_∞`.
pub fn linf_distance(x: &[i64], y: &[i64]) -> u64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| a.abs_diff(*b))
        .max()
        .unwrap_or(0)
}

/// `|x − y|_1`.
pub fn l1_distance(x: &[i64], y: &[i64]) -> u64 {
    x.iter().zip(y).map(|(a, b)| a.abs_diff(*b)).sum()
}

/// Euclidean distance.
pub fn l2_distance(x: &[i64], y: &[i64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| ((a - b) as f64).powi(2))
        .sum::<f64>()
        .sqrt()
}

// ── Union-find ────────────────────────────────────────────────────

#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        assert!(n <= u32::MAX as usize, "union-find limited to 2^32 elements");
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let p = self.parent[x] as usize;
            self.parent[x] = self.parent[p];
            x = p;
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        true
    }
}

// ── Clusters ──────────────────────────────────────────────────────

/// Connected components of the open subgraph of a box.
///
/// Component ids are the smallest dense vertex index in the component.
/// In edge mode every vertex counts as open; a vertex with no open edge
/// forms its own component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabeling {
    labels: Vec<Option<usize>>,
    /// `(id, size)` sorted by id.
    components: Vec<(usize, usize)>,
    touches_target: Vec<bool>,
}

impl ClusterLabeling {
    pub fn label(&self, v: usize) -> Option<usize> {
        self.labels[v]
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[(usize, usize)] {
        &self.components
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.components.iter().map(|c| c.1).collect()
    }

    pub fn num_open(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }

    pub fn connected(&self, u: usize, v: usize) -> bool {
        matches!((self.labels[u], self.labels[v]), (Some(a), Some(b)) if a == b)
    }

    /// Flags each component (in `components()` order) that meets `target`.
    pub fn mark_target(&mut self, target: &[usize]) {
        self.touches_target = vec![false; self.components.len()];
        for &v in target {
            if let Some(id) = self.labels[v] {
                let k = self.position(id);
                self.touches_target[k] = true;
            }
        }
    }

    pub fn touches_target(&self) -> &[bool] {
        &self.touches_target
    }

    fn position(&self, id: usize) -> usize {
        self.components
            .binary_search_by_key(&id, |c| c.0)
            .expect("label refers to a known component")
    }
}

pub fn label_clusters(lattice: &LatticeBox, open: OpenMask<'_>) -> Result<ClusterLabeling> {
    let n = lattice.num_vertices();
    let mut uf = UnionFind::new(n);
    let vertex_open: Vec<bool> = match open {
        OpenMask::Vertices(mask) => {
            if mask.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: mask.len() });
            }
            for v in 0..n {
                if !mask[v] {
                    continue;
                }
                for a in 0..lattice.dim() {
                    if let Some(u) = lattice.step(v, a, true) {
                        if mask[u] {
                            uf.union(v, u);
                        }
                    }
                }
            }
            mask.to_vec()
        }
        OpenMask::Edges(mask) => {
            if mask.len() != lattice.num_edges() {
                return Err(Error::LengthMismatch {
                    expected: lattice.num_edges(),
                    got: mask.len(),
                });
            }
            for (e, &o) in mask.iter().enumerate() {
                if o {
                    let (a, b) = lattice.edge_endpoints(e);
                    uf.union(a, b);
                }
            }
            vec![true; n]
        }
    };
    // root -> smallest index; vertices visited in increasing order so the first hit wins
    let mut root_min = vec![usize::MAX; n];
    let mut labels = vec![None; n];
    let mut sizes = vec![0usize; n];
    for v in 0..n {
        if !vertex_open[v] {
            continue;
        }
        let r = uf.find(v);
        if root_min[r] == usize::MAX {
            root_min[r] = v;
        }
        let id = root_min[r];
        labels[v] = Some(id);
        sizes[id] += 1;
    }
    let components: Vec<(usize, usize)> = (0..n)
        .filter(|&v| sizes[v] > 0)
        .map(|v| (v, sizes[v]))
        .collect();
    let touches_target = vec![false; components.len()];
    Ok(ClusterLabeling {
        labels,
        components,
        touches_target,
    })
}

/// True iff some component meets both `a` and `b`. Empty sets give `false`.
pub fn crossing_event(labeling: &ClusterLabeling, a: &[usize], b: &[usize]) -> bool {
    if a.is_empty() || b.is_empty() {
        return false;
    }
    let mut ids: Vec<usize> = a.iter().filter_map(|&v| labeling.label(v)).collect();
    ids.sort_unstable();
    ids.dedup();
    b.iter()
        .filter_map(|&v| labeling.label(v))
        .any(|id| ids.binary_search(&id).is_ok())
}

/// Breadth-first search over open vertices; returns per-vertex hop counts
/// from `sources` (`None` when unreachable or closed).
pub fn bfs_hops(lattice: &LatticeBox, open: &[bool], sources: &[usize]) -> Vec<Option<u32>> {
    let mut dist = vec![None; lattice.num_vertices()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if open[s] && dist[s].is_none() {
            dist[s] = Some(0);
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        let dv = dist[v].unwrap();
        lattice.for_each_neighbor(v, |u, _| {
            if open[u] && dist[u].is_none() {
                dist[u] = Some(dv + 1);
                queue.push_back(u);
            }
        });
    }
    dist
}
