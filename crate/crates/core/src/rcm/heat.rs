//! Heat kernel `p(t,x,y) = P_x[X_t = y]/θ(y)`.
//!
//! With `A = θ(−L)` and `S = Θ^{−1/2} A Θ^{−1/2}` the semigroup is
//! `P_x[X_t = y] = θ(x)^{−1/2} (e^{−tS})_{xy} θ(y)^{1/2}`, hence
//! `p(t,x,y) = (e^{−tS})_{xy} / √(θ(x)θ(y))`, symmetric in `x, y`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::env::ConductanceEnvironment;
use super::walk::{JumpTable, BLOCK};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::solver::{to_dense, SpdOperator};

/// Largest box for dense diagonalization.
pub const EXACT_MAX_VERTICES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum HeatMethod {
    ExactSmall,
    Krylov { tolerance: f64 },
    MonteCarlo { walks: usize, stream: RngStream },
}

impl HeatMethod {
    pub fn name(&self) -> &'static str {
        match self {
            HeatMethod::ExactSmall => "exact-small",
            HeatMethod::Krylov { .. } => "krylov",
            HeatMethod::MonteCarlo { .. } => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone)]
pub struct HeatKernelSlice {
    pub t: f64,
    pub source: usize,
    /// `p(t, source, y)` per vertex `y`.
    pub values: Vec<f64>,
    pub method: &'static str,
    /// Estimated absolute ℓ² error of `e^{−tS}δ_x` (numerical methods).
    pub error_estimate: f64,
    /// Per-vertex standard errors (Monte Carlo only).
    pub stderr: Option<Vec<f64>>,
}

impl HeatKernelSlice {
    /// `Σ_y p(t,x,y) θ(y)`, the survival probability.
    pub fn mass(&self, theta: &[f64]) -> f64 {
        self.values.iter().zip(theta).map(|(p, t)| p * t).sum()
    }
}

fn point_mass(env: &ConductanceEnvironment, x: usize, method: &'static str) -> HeatKernelSlice {
    let mut values = vec![0.0; env.lattice.num_vertices()];
    values[x] = 1.0 / env.theta[x];
    HeatKernelSlice { t: 0.0, source: x, values, method, error_estimate: 0.0, stderr: None }
}

/// `p(t, x, ·)` by the selected method.
pub fn heat_kernel(env: &ConductanceEnvironment, x: usize, t: f64, method: HeatMethod) -> Result<HeatKernelSlice> {
    Ok(heat_kernel_series(env, x, &[t], method)?.pop().unwrap())
}

/// `p(t, x, ·)` for every `t` of an increasing grid, reusing work between times.
pub fn heat_kernel_series(env: &ConductanceEnvironment, x: usize, times: &[f64], method: HeatMethod) -> Result<Vec<HeatKernelSlice>> {
    if x >= env.lattice.num_vertices() {
        return Err(Error::InvalidGeometry(format!("source index {x} outside the box")));
    }
    if times.is_empty() || times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("times must be finite, >= 0 and non-decreasing".into()));
    }
    match method {
        HeatMethod::ExactSmall => {
            let exact = ExactHeatKernel::new(env)?;
            Ok(times.iter().map(|&t| exact.slice(x, t)).collect())
        }
        HeatMethod::Krylov { tolerance } => krylov_series(env, x, times, tolerance),
        HeatMethod::MonteCarlo { walks, stream } => monte_carlo_series(env, x, times, walks, stream),
    }
}

// ── dense diagonalization ──

/// Eigendecomposition of `S` for repeated exact evaluations on small boxes.
pub struct ExactHeatKernel {
    sqrt_theta: Vec<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl ExactHeatKernel {
    pub fn new(env: &ConductanceEnvironment) -> Result<Self> {
        let n = env.lattice.num_vertices();
        if n > EXACT_MAX_VERTICES {
            return Err(Error::Budget(format!("exact-small needs at most {EXACT_MAX_VERTICES} vertices, box has {n}")));
        }
        let killing = env.killing_rates();
        let dense = to_dense(&env.operator(&killing, true));
        let sqrt_theta: Vec<f64> = env.theta.iter().map(|t| t.sqrt()).collect();
        let s = DMatrix::from_fn(n, n, |i, j| dense[i * n + j] / (sqrt_theta[i] * sqrt_theta[j]));
        let eig = SymmetricEigen::new(s);
        Ok(Self { sqrt_theta, eigenvalues: eig.eigenvalues, eigenvectors: eig.eigenvectors })
    }

    pub fn smallest_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `Σ_k w_k Q_{xk} Q_{·k}` scaled by `1/√(θ(x)θ(·))`.
    fn combine(&self, x: usize, weight: impl Fn(f64) -> f64) -> Vec<f64> {
        let q = &self.eigenvectors;
        let n = q.nrows();
        let coef: Vec<f64> = (0..n).map(|k| weight(self.eigenvalues[k]) * q[(x, k)]).collect();
        (0..n)
            .map(|y| {
                let v: f64 = (0..n).map(|k| q[(y, k)] * coef[k]).sum();
                v / (self.sqrt_theta[x] * self.sqrt_theta[y])
            })
            .collect()
    }

    pub fn slice(&self, x: usize, t: f64) -> HeatKernelSlice {
        let values = self.combine(x, |l| (-t * l).exp()).into_iter().map(|p| p.max(0.0)).collect();
        HeatKernelSlice { t, source: x, values, method: "exact-small", error_estimate: 0.0, stderr: None }
    }

    /// `∫₀^∞ p(t, x, ·) dt` by Gauss–Legendre panels on `[0, T]` with
    /// doubling widths; stops once the tail bound `e^{−λ₀T}/(λ₀ θ_min)`
    /// falls below `rel_tol` times the running maximum. Returns the
    /// integral and the final tail bound.
    pub fn time_integral(&self, x: usize, rel_tol: f64) -> Result<(Vec<f64>, f64)> {
        let lambda0 = self.smallest_eigenvalue();
        if !(lambda0 > 0.0) {
            return Err(Error::Degenerate("operator is singular; the time integral diverges".into()));
        }
        let theta_min = self.sqrt_theta.iter().map(|s| s * s).fold(f64::INFINITY, f64::min);
        let (nodes, weights) = gauss_legendre(16);
        let n = self.sqrt_theta.len();
        let mut total = vec![0.0; n];
        let (mut lo, mut width) = (0.0, 0.125);
        loop {
            for (z, w) in nodes.iter().zip(&weights) {
                let t = lo + 0.5 * width * (z + 1.0);
                let p = self.combine(x, |l| (-t * l).exp());
                for (acc, v) in total.iter_mut().zip(p) {
                    *acc += 0.5 * width * w * v;
                }
            }
            lo += width;
            width = lo;
            let tail = (-lambda0 * lo).exp() / (lambda0 * theta_min);
            let scale = total.iter().copied().fold(0.0, f64::max);
            if tail <= rel_tol * scale {
                return Ok((total, tail));
            }
            if lo > 1e12 {
                return Err(Error::NotConverged { iterations: 0, residual: tail / scale });
            }
        }
    }
}

/// Nodes and weights of `n`-point Gauss–Legendre quadrature on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (nodes, weights)
}

// ── Lanczos ──

struct Symmetrized<'a> {
    op: crate::solver::LatticeOperator<'a>,
    inv_sqrt_theta: Vec<f64>,
    scratch: std::cell::RefCell<Vec<f64>>,
}

impl Symmetrized<'_> {
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let mut s = self.scratch.borrow_mut();
        for ((s, v), w) in s.iter_mut().zip(v).zip(&self.inv_sqrt_theta) {
            *s = v * w;
        }
        self.op.apply(&s, out);
        for (o, w) in out.iter_mut().zip(&self.inv_sqrt_theta) {
            *o *= w;
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `e^{−τS} v` from an `m`-dimensional Krylov space with full reorthogonalization.
fn lanczos_expm(s: &Symmetrized<'_>, v: &[f64], tau: f64, m: usize) -> Vec<f64> {
    let n = v.len();
    let beta0 = norm(v);
    if beta0 == 0.0 || tau == 0.0 {
        return v.to_vec();
    }
    let mut basis: Vec<Vec<f64>> = vec![v.iter().map(|x| x / beta0).collect()];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta = Vec::new();
    let mut w = vec![0.0; n];
    for j in 0..m.min(n) {
        s.apply(&basis[j], &mut w);
        alpha.push(basis[j].iter().zip(&w).map(|(a, b)| a * b).sum());
        for q in &basis {
            let c: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi -= c * qi;
            }
        }
        let b = norm(&w);
        if j + 1 == m.min(n) || b <= 1e-14 * alpha.iter().fold(1.0f64, |a, x| a.max(x.abs())) {
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    let k = alpha.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    // coefficients = U e^{−τΛ} Uᵀ e₁
    let coef: Vec<f64> = (0..k)
        .map(|i| {
            (0..k)
                .map(|l| eig.eigenvectors[(i, l)] * (-tau * eig.eigenvalues[l]).exp() * eig.eigenvectors[(0, l)])
                .sum::<f64>()
        })
        .collect();
    let mut out = vec![0.0; n];
    for (q, c) in basis.iter().zip(&coef) {
        for (o, qi) in out.iter_mut().zip(q) {
            *o += beta0 * c * qi;
        }
    }
    out
}

const KRYLOV_DIM: usize = 30;

/// Advances `v ← e^{−τS} v` over `duration` with step-doubling control:
/// a full step is compared with two half steps and accepted when they
/// agree to `tol` relative to the solution norm. Returns the summed
/// local error estimates.
fn advance(s: &Symmetrized<'_>, v: &mut Vec<f64>, duration: f64, tol: f64, tau: &mut f64) -> f64 {
    let mut done = 0.0;
    let mut err_total = 0.0;
    while done < duration {
        let step = tau.min(duration - done);
        let full = lanczos_expm(s, v, step, KRYLOV_DIM);
        let half = lanczos_expm(s, v, 0.5 * step, KRYLOV_DIM);
        let two = lanczos_expm(s, &half, 0.5 * step, KRYLOV_DIM);
        let diff: f64 = full.iter().zip(&two).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let scale = norm(&two).max(f64::MIN_POSITIVE);
        if diff <= tol * scale || step < 1e-12 {
            *v = two;
            done += step;
            err_total += diff;
            if diff < 0.1 * tol * scale {
                *tau = 2.0 * step;
            }
        } else {
            *tau = 0.5 * step;
        }
    }
    err_total
}

fn krylov_series(env: &ConductanceEnvironment, x: usize, times: &[f64], tol: f64) -> Result<Vec<HeatKernelSlice>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("Krylov tolerance must be positive".into()));
    }
    let killing = env.killing_rates();
    let n = env.lattice.num_vertices();
    let inv_sqrt_theta: Vec<f64> = env.theta.iter().map(|t| 1.0 / t.sqrt()).collect();
    let s = Symmetrized { op: env.operator(&killing, true), inv_sqrt_theta: inv_sqrt_theta.clone(), scratch: vec![0.0; n].into() };
    let mut v = vec![0.0; n];
    v[x] = 1.0;
    let mut now = 0.0;
    let mut tau = 1.0;
    let mut err = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if t == 0.0 {
            out.push(point_mass(env, x, "krylov"));
            continue;
        }
        err += advance(&s, &mut v, t - now, tol, &mut tau);
        now = t;
        let values = v
            .iter()
            .zip(&inv_sqrt_theta)
            .map(|(vy, w)| (vy * w * inv_sqrt_theta[x]).max(0.0))
            .collect();
        out.push(HeatKernelSlice { t, source: x, values, method: "krylov", error_estimate: err, stderr: None });
    }
    Ok(out)
}

// ── Monte Carlo ──

fn monte_carlo_series(env: &ConductanceEnvironment, x: usize, times: &[f64], walks: usize, stream: RngStream) -> Result<Vec<HeatKernelSlice>> {
    if walks < 2 {
        return Err(Error::Budget("monte-carlo needs at least two walks".into()));
    }
    let table = JumpTable::new(env);
    let n = env.lattice.num_vertices();
    let k = times.len();
    let horizon = *times.last().unwrap();
    let blocks = walks.div_ceil(BLOCK);
    let counts = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let count = BLOCK.min(walks - b * BLOCK);
            let mut rng = stream.child(b as u64).generator();
            let mut hits = vec![0u64; k * n];
            for _ in 0..count {
                let mut clock = 0.0;
                let mut next = 0;
                table.run(x, horizon, &mut rng, |v, hold| {
                    // record v at every grid time inside [clock, clock + hold)
                    while next < k && (times[next] < clock + hold || clock + hold >= horizon) {
                        hits[next * n + v] += 1;
                        next += 1;
                    }
                    clock += hold;
                });
            }
            hits
        })
        .collect::<Vec<_>>();
    let mut hits = vec![0u64; k * n];
    for c in &counts {
        for (h, v) in hits.iter_mut().zip(c) {
            *h += v;
        }
    }
    let w = walks as f64;
    Ok((0..k)
        .map(|i| {
            let row = &hits[i * n..(i + 1) * n];
            let values = row.iter().zip(&env.theta).map(|(&c, th)| c as f64 / w / th).collect();
            let stderr = row
                .iter()
                .zip(&env.theta)
                .map(|(&c, th)| {
                    let p = c as f64 / w;
                    (p * (1.0 - p) / (w - 1.0)).sqrt() / th
                })
                .collect();
            HeatKernelSlice { t: times[i], source: x, values, method: "monte-carlo", error_estimate: 0.0, stderr: Some(stderr) }
        })
        .collect())
}
