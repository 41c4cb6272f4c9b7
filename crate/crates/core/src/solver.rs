//! Jacobi-preconditioned conjugate gradients for the symmetric
//! positive-definite lattice operators `−L` used by the Green solves.

use crate::error::{Error, Result};
use crate::lattice::LatticeBox;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

pub trait SpdOperator {
    fn len(&self) -> usize;
    fn apply(&self, x: &[f64], out: &mut [f64]);
    fn diagonal(&self) -> Vec<f64>;
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `‖b − A x‖ / ‖b‖`, recomputed from scratch at exit.
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators keep the sum order fixed and reduce rounding drift
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        for k in 0..4 {
            acc[k] += a[4 * i + k] * b[4 * i + k];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

pub fn pcg<A: SpdOperator + ?Sized>(op: &A, b: &[f64], tol: f64, max_iter: usize) -> Result<Solution> {
    let n = op.len();
    assert_eq!(b.len(), n);
    let inv_diag: Vec<f64> = op
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(Solution { x: vec![0.0; n], iterations: 0, relative_residual: 0.0 });
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut iterations = 0;
    // iterate slightly past the target so the recomputed residual also meets it
    let inner_tol = 0.5 * tol;
    while iterations < max_iter {
        if dot(&r, &r).sqrt() <= inner_tol * b_norm {
            break;
        }
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::Degenerate("operator is not positive definite".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        iterations += 1;
    }
    op.apply(&x, &mut ap);
    let res: f64 = b.iter().zip(&ap).map(|(b, a)| (b - a) * (b - a)).sum::<f64>().sqrt() / b_norm;
    if res > tol {
        return Err(Error::NotConverged { iterations, residual: res });
    }
    Ok(Solution { x, iterations, relative_residual: res })
}

/// `(A f)(x) = Σ_{y∼x} a(x,y)(f(x) − f(y)) + m(x) f(x)` on a box, with
/// `f = 0` outside the box and on inactive vertices. `exterior[x]` is
/// the total conductance from `x` to absorbed neighbors outside the box.
#[derive(Debug, Clone)]
pub struct LatticeOperator<'a> {
    pub lattice: &'a LatticeBox,
    /// `None` means unit conductance on every in-box edge.
    pub conductance: Option<&'a [f64]>,
    pub exterior: Exterior<'a>,
    pub potential: Option<&'a [f64]>,
    pub active: Option<&'a [bool]>,
}

#[derive(Debug, Clone, Copy)]
pub enum Exterior<'a> {
    /// Unit conductance to every Z^d neighbor outside the box.
    UnitAbsorbing,
    /// Given per-vertex total conductance to the outside.
    Absorbing(&'a [f64]),
    /// Reflecting box: no exterior edges.
    Free,
}

impl<'a> LatticeOperator<'a> {
    pub fn laplacian(lattice: &'a LatticeBox) -> Self {
        Self {
            lattice,
            conductance: None,
            exterior: Exterior::UnitAbsorbing,
            potential: None,
            active: None,
        }
    }

    #[inline]
    fn is_active(&self, v: usize) -> bool {
        self.active.map_or(true, |a| a[v])
    }

    #[inline]
    fn exterior_at(&self, v: usize) -> f64 {
        match self.exterior {
            Exterior::UnitAbsorbing => self.lattice.exterior_degree(v) as f64,
            Exterior::Absorbing(w) => w[v],
            Exterior::Free => 0.0,
        }
    }

    /// Diagonal entry including conductances to inactive neighbors,
    /// which act as absorbing sites.
    fn diag_at(&self, v: usize) -> f64 {
        let mut s = self.exterior_at(v) + self.potential.map_or(0.0, |m| m[v]);
        self.lattice.for_each_neighbor(v, |_, e| {
            s += self.conductance.map_or(1.0, |c| c[e]);
        });
        s
    }
}

impl SpdOperator for LatticeOperator<'_> {
    fn len(&self) -> usize {
        self.lattice.num_vertices()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let lat = self.lattice;
        for v in 0..lat.num_vertices() {
            if !self.is_active(v) {
                out[v] = 0.0;
                continue;
            }
            let mut s = (self.exterior_at(v) + self.potential.map_or(0.0, |m| m[v])) * x[v];
            lat.for_each_neighbor(v, |u, e| {
                let a = self.conductance.map_or(1.0, |c| c[e]);
                s += a * x[v];
                if self.is_active(u) {
                    s -= a * x[u];
                }
            });
            out[v] = s;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.lattice.num_vertices())
            .map(|v| if self.is_active(v) { self.diag_at(v) } else { 0.0 })
            .collect()
    }
}

/// Dense copy of a small operator, row-major.
pub fn to_dense<A: SpdOperator + ?Sized>(op: &A) -> Vec<f64> {
    let n = op.len();
    let mut out = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        for i in 0..n {
            out[i * n + j] = col[i];
        }
        e[j] = 0.0;
    }
    out
}
