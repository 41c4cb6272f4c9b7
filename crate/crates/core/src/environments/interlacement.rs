//! Random interlacements restricted to a target box.
//!
//! Transience is approximated by killing walks when they leave an ambient
//! box (the target inflated by a margin). Every quantity here uses the walk
//! with Exp(1) holding times, whose occupation Green function is
//! `2d · g_dirichlet`. On the ambient box the construction is exact for that
//! killed walk: the number of trajectories hitting `K` is Poisson with mean
//! `u·cap(K)` and each enters `K` at a point drawn from `e_K / cap(K)`.

use rand::Rng;

use super::{dirichlet_green_column, Provenance, ScalarField};
use crate::error::{Error, Result};
use crate::lattice::LatticeBox;
use crate::rng::{exponential, open_uniform, poisson, RngStream};
use crate::solver::{pcg, LatticeOperator, DEFAULT_TOLERANCE};

#[derive(Debug, Clone)]
pub struct EquilibriumMeasure {
    /// `e_K(x)` per ambient vertex; zero off `K`.
    pub weights: Vec<f64>,
    pub capacity: f64,
}

/// Smallest accepted per-side margin: the largest target side, so the
/// ambient box is at least three times the target along every axis.
pub fn min_ambient_margin(target: &LatticeBox) -> usize {
    target.sides().iter().copied().max().unwrap_or(1)
}

fn require_transient(lattice: &LatticeBox) -> Result<()> {
    if lattice.dim() < 3 {
        return Err(Error::InvalidGeometry(format!(
            "random interlacements require d >= 3, got d = {}",
            lattice.dim()
        )));
    }
    Ok(())
}

/// Occupation Green function `g(·, y)` of the Exp(1)-holding walk killed
/// outside `ambient`.
pub fn exp1_green_column(ambient: &LatticeBox, y: usize) -> Result<Vec<f64>> {
    let scale = 2.0 * ambient.dim() as f64;
    Ok(dirichlet_green_column(ambient, y)?.into_iter().map(|g| g * scale).collect())
}

/// `e_K(x) = P_x[walk leaves the ambient box before returning to K]` for
/// `x ∈ K`, from one solve of the hitting-probability problem off `K`.
pub fn equilibrium_measure(k: &[usize], ambient: &LatticeBox) -> Result<EquilibriumMeasure> {
    require_transient(ambient)?;
    let n = ambient.num_vertices();
    let mut in_k = vec![false; n];
    for &v in k {
        if v >= n {
            return Err(Error::InvalidGeometry(format!("vertex index {v} outside the ambient box")));
        }
        in_k[v] = true;
    }
    let active: Vec<bool> = in_k.iter().map(|&b| !b).collect();
    let mut rhs = vec![0.0; n];
    for v in 0..n {
        if active[v] {
            ambient.for_each_neighbor(v, |u, _| {
                if in_k[u] {
                    rhs[v] += 1.0;
                }
            });
        }
    }
    let op = LatticeOperator { active: Some(&active), ..LatticeOperator::laplacian(ambient) };
    let hit = pcg(&op, &rhs, DEFAULT_TOLERANCE, 50 * n.max(100))?.x;
    let two_d = 2.0 * ambient.dim() as f64;
    let mut weights = vec![0.0; n];
    for v in 0..n {
        if !in_k[v] {
            continue;
        }
        let mut ret = 0.0;
        ambient.for_each_neighbor(v, |u, _| {
            ret += if in_k[u] { 1.0 } else { hit[u] };
        });
        weights[v] = (1.0 - ret / two_d).max(0.0);
    }
    let capacity = weights.iter().sum();
    Ok(EquilibriumMeasure { weights, capacity })
}

/// `u · Σ_y e_K(y) g(y, x)` for every ambient vertex `x`, by one linear solve.
pub fn campbell_mean_occupation(measure: &EquilibriumMeasure, ambient: &LatticeBox, u: f64) -> Result<Vec<f64>> {
    let op = LatticeOperator::laplacian(ambient);
    let n = ambient.num_vertices();
    let w = pcg(&op, &measure.weights, DEFAULT_TOLERANCE, 50 * n.max(100))?.x;
    let scale = u * 2.0 * ambient.dim() as f64;
    Ok(w.into_iter().map(|x| x * scale).collect())
}

/// Precomputed state for repeated occupation-field draws on one target box.
#[derive(Debug, Clone)]
pub struct InterlacementSampler {
    target: LatticeBox,
    ambient: LatticeBox,
    margin: usize,
    measure: EquilibriumMeasure,
    /// Cumulative entrance weights over the support of `e_K`.
    cumulative: Vec<(f64, usize)>,
    /// Ambient index → target index, `u32::MAX` outside the target.
    target_index: Vec<u32>,
}

impl InterlacementSampler {
    pub fn new(target: &LatticeBox, margin: usize) -> Result<Self> {
        require_transient(target)?;
        let min = min_ambient_margin(target);
        if margin < min {
            return Err(Error::InvalidGeometry(format!(
                "ambient_margin {margin} below the minimum {min} for this target"
            )));
        }
        let ambient = target.inflate(margin)?;
        let k = ambient.vertices_in(target);
        let measure = equilibrium_measure(&k, &ambient)?;
        let mut cumulative = Vec::new();
        let mut acc = 0.0;
        for (v, &w) in measure.weights.iter().enumerate() {
            if w > 0.0 {
                acc += w;
                cumulative.push((acc, v));
            }
        }
        let mut target_index = vec![u32::MAX; ambient.num_vertices()];
        for (v, slot) in target_index.iter_mut().enumerate() {
            if let Some(t) = target.index_of(&ambient.coords(v)) {
                *slot = t as u32;
            }
        }
        Ok(Self { target: target.clone(), ambient, margin, measure, cumulative, target_index })
    }

    pub fn ambient(&self) -> &LatticeBox {
        &self.ambient
    }

    pub fn target(&self) -> &LatticeBox {
        &self.target
    }

    pub fn measure(&self) -> &EquilibriumMeasure {
        &self.measure
    }

    pub fn capacity(&self) -> f64 {
        self.measure.capacity
    }

    fn entrance<R: Rng>(&self, rng: &mut R) -> usize {
        let x = open_uniform(rng) * self.measure.capacity;
        let i = self.cumulative.partition_point(|&(c, _)| c < x);
        self.cumulative[i.min(self.cumulative.len() - 1)].1
    }

    /// Runs one Exp(1)-holding walk from `start` until it leaves the
    /// ambient box, adding its holding times into `occupation`.
    fn run_walk<R: Rng>(&self, start: usize, rng: &mut R, occupation: &mut [f64]) {
        let d = self.ambient.dim();
        let mut v = start;
        loop {
            let hold = exponential(rng, 1.0);
            let t = self.target_index[v];
            if t != u32::MAX {
                occupation[t as usize] += hold;
            }
            let dir = rng.gen_range(0..2 * d);
            match self.ambient.step(v, dir / 2, dir % 2 == 0) {
                Some(next) => v = next,
                None => break,
            }
        }
    }

    pub fn sample(&self, u: f64, stream: RngStream) -> Result<ScalarField> {
        Ok(self.sample_levels(&[u], stream)?.pop().unwrap())
    }

    /// Occupation fields at several levels under the monotone thinning
    /// coupling: trajectories are drawn at the largest level and each is
    /// kept at level `u` with probability `u / u_max`, so
    /// `L_{x,u} ≤ L_{x,u'}` pointwise for `u ≤ u'`.
    pub fn sample_levels(&self, levels: &[f64], stream: RngStream) -> Result<Vec<ScalarField>> {
        if levels.is_empty() || levels.iter().any(|&u| !(u > 0.0) || !u.is_finite()) {
            return Err(Error::InvalidParameter("interlacement levels must be positive".into()));
        }
        let u_max = levels.iter().copied().fold(0.0, f64::max);
        let mut rng = stream.generator();
        let n_traj = poisson(&mut rng, u_max * self.measure.capacity);
        let nt = self.target.num_vertices();
        let mut fields = vec![vec![0.0; nt]; levels.len()];
        let mut occ = vec![0.0; nt];
        for _ in 0..n_traj {
            let mark = open_uniform(&mut rng) * u_max;
            let start = self.entrance(&mut rng);
            occ.iter_mut().for_each(|x| *x = 0.0);
            self.run_walk(start, &mut rng, &mut occ);
            for (field, &u) in fields.iter_mut().zip(levels) {
                if mark <= u {
                    for (f, o) in field.iter_mut().zip(&occ) {
                        *f += o;
                    }
                }
            }
        }
        let params = |u: f64| {
            serde_json::json!({
                "u": u,
                "ambient_margin": self.margin,
                "capacity": self.measure.capacity,
                "transience_error_scale": (self.margin as f64).powi(2 - self.target.dim() as i32),
            })
        };
        Ok(fields
            .into_iter()
            .zip(levels)
            .map(|(values, &u)| ScalarField {
                lattice: self.target.clone(),
                values,
                provenance: Provenance {
                    sampler: "interlacement-occupation".into(),
                    stream: Some(stream),
                    parameters: params(u),
                },
            })
            .collect())
    }
}

pub fn sample_interlacement_occupation(
    target: &LatticeBox,
    ambient_margin: usize,
    u: f64,
    stream: RngStream,
) -> Result<ScalarField> {
    InterlacementSampler::new(target, ambient_margin)?.sample(u, stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn rejects_low_dimension_and_small_margin() {
        let t2 = LatticeBox::cube(2, 3).unwrap();
        assert!(InterlacementSampler::new(&t2, 5).is_err());
        let t3 = LatticeBox::cube(3, 3).unwrap();
        assert!(InterlacementSampler::new(&t3, 2).is_err());
        assert!(InterlacementSampler::new(&t3, 3).is_ok());
    }

    #[test]
    fn whole_box_measure_lives_on_internal_boundary() {
        let amb = LatticeBox::cube(3, 4).unwrap();
        let all: Vec<usize> = (0..amb.num_vertices()).collect();
        let m = equilibrium_measure(&all, &amb).unwrap();
        let boundary = amb.internal_boundary();
        for v in 0..amb.num_vertices() {
            let expected = amb.exterior_degree(v) as f64 / 6.0;
            assert!((m.weights[v] - expected).abs() < 1e-12);
            assert_eq!(m.weights[v] > 0.0, boundary.contains(&v));
        }
    }

    #[test]
    fn singleton_capacity_inverts_green_diagonal() {
        let amb = LatticeBox::cube(3, 7).unwrap();
        let x = amb.index_of(&[3, 3, 3]).unwrap();
        let m = equilibrium_measure(&[x], &amb).unwrap();
        let g = exp1_green_column(&amb, x).unwrap()[x];
        assert!((m.capacity * g - 1.0).abs() < 1e-9);
    }

    #[test]
    fn measure_matches_inverse_green_block() {
        // e_K = (G restricted to K)^{-1} 1, an independent route via dense inversion
        let amb = LatticeBox::cube(3, 6).unwrap();
        let inner = LatticeBox::new(&[2, 2, 1], &[2, 2, 2]).unwrap();
        let k = amb.vertices_in(&inner);
        let m = equilibrium_measure(&k, &amb).unwrap();
        let cols: Vec<Vec<f64>> = k.iter().map(|&y| exp1_green_column(&amb, y).unwrap()).collect();
        let gk = DMatrix::from_fn(k.len(), k.len(), |i, j| cols[j][k[i]]);
        let e = gk.try_inverse().unwrap() * nalgebra::DVector::from_element(k.len(), 1.0);
        for (i, &v) in k.iter().enumerate() {
            assert!((m.weights[v] - e[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn capacity_is_monotone_in_nested_boxes() {
        let amb = LatticeBox::cube(3, 9).unwrap();
        let mut last = 0.0;
        for r in 0..3 {
            let inner = LatticeBox::centered(&[4, 4, 4], r).unwrap();
            let cap = equilibrium_measure(&amb.vertices_in(&inner), &amb).unwrap().capacity;
            assert!(cap > last);
            last = cap;
        }
    }

    #[test]
    fn last_exit_identity() {
        // Σ_y g(x,y) e_K(y) = 1 for x in K
        let amb = LatticeBox::cube(3, 7).unwrap();
        let inner = LatticeBox::new(&[3, 2, 2], &[2, 2, 2]).unwrap();
        let m = equilibrium_measure(&amb.vertices_in(&inner), &amb).unwrap();
        let mean = campbell_mean_occupation(&m, &amb, 1.0).unwrap();
        for v in amb.vertices_in(&inner) {
            assert!((mean[v] - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn coupled_levels_are_ordered() {
        let t = LatticeBox::cube(3, 3).unwrap();
        let s = InterlacementSampler::new(&t, 3).unwrap();
        for r in 0..20 {
            let f = s.sample_levels(&[0.5, 1.0, 2.0], RngStream::new(5, r)).unwrap();
            for x in 0..t.num_vertices() {
                assert!(f[0].values[x] <= f[1].values[x]);
                assert!(f[1].values[x] <= f[2].values[x]);
                assert!(f[0].values[x] >= 0.0);
            }
        }
    }

    #[test]
    fn tiny_intensity_gives_empty_field() {
        let t = LatticeBox::cube(3, 2).unwrap();
        let s = InterlacementSampler::new(&t, 2).unwrap();
        let zeros = (0..200)
            .filter(|&r| s.sample(1e-6, RngStream::new(1, r)).unwrap().values.iter().all(|&v| v == 0.0))
            .count();
        assert!(zeros >= 199);
    }
}
