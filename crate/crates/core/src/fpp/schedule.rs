//! Renormalization scales `L_k` and the companion sequences `a_k`, `ε_k`.
//!
//! `L_{k+1} = 2 L_k (1 + ρ_k/(k+6)^δ)` with `ρ_k = ρ` for `k < K` and 1
//! afterwards, `a_k = 2^k ∏_{i<k} (1 − (i+6)^{−δ})` and
//! `ε_k = ε Σ_{p≥k} (p+6)^{−δ} = ε ζ(δ, k+6)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaleSchedule {
    pub delta: f64,
    pub rho: f64,
    pub k_switch: usize,
    pub l0: f64,
    pub k_max: usize,
    pub scales: Vec<f64>,
    pub rhos: Vec<f64>,
    pub a: Vec<f64>,
    /// `c₁₃ = exp(ρ Σ_{i<K} (i+6)^{−δ} + (K+5)^{1−δ}/(δ−1))`, an upper bound on `L_k / (2^k L₀)`.
    pub product_bound: f64,
}

impl ScaleSchedule {
    /// `ε_k` for `k = 0..=k_max` given the total sprinkling budget `ε`.
    pub fn epsilons(&self, epsilon: f64) -> Vec<f64> {
        (0..=self.k_max)
            .map(|k| epsilon * hurwitz_zeta(self.delta, (k + 6) as f64))
            .collect()
    }

    /// `L_k / (2^k L₀)`.
    pub fn normalized_scales(&self) -> Vec<f64> {
        self.scales
            .iter()
            .enumerate()
            .map(|(k, l)| l / (2f64.powi(k as i32) * self.l0))
            .collect()
    }

    /// Checks `2^k L₀ ≤ L_k ≤ c₁₃ 2^k L₀` and that `L_k/2^k L₀` is non-decreasing.
    pub fn invariant_flags(&self) -> ScheduleFlags {
        let norm = self.normalized_scales();
        ScheduleFlags {
            lower_bound: norm.iter().all(|&r| r >= 1.0),
            upper_bound: norm.iter().all(|&r| r <= self.product_bound),
            monotone: norm.windows(2).all(|w| w[1] >= w[0]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleFlags {
    pub lower_bound: bool,
    pub upper_bound: bool,
    pub monotone: bool,
}

impl ScheduleFlags {
    pub fn all(&self) -> bool {
        self.lower_bound && self.upper_bound && self.monotone
    }
}

pub fn build_scale_schedule(delta: f64, rho: f64, k_switch: usize, l0: f64, k_max: usize) -> Result<ScaleSchedule> {
    if !(delta > 1.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!("delta must exceed 1 (got {delta})")));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidParameter(format!("rho must be positive (got {rho})")));
    }
    if !(l0 > 0.0) || !l0.is_finite() {
        return Err(Error::InvalidParameter(format!("L0 must be positive (got {l0})")));
    }
    let rhos: Vec<f64> = (0..=k_max).map(|k| if k < k_switch { rho } else { 1.0 }).collect();
    let mut scales = Vec::with_capacity(k_max + 1);
    let mut a = Vec::with_capacity(k_max + 1);
    let mut l = l0;
    let mut ak = 1.0;
    for k in 0..=k_max {
        scales.push(l);
        a.push(ak);
        let step = ((k + 6) as f64).powf(-delta);
        l = 2.0 * l * (1.0 + rhos[k] * step);
        ak = 2.0 * ak * (1.0 - step);
    }
    let head: f64 = (0..k_switch).map(|i| rho * ((i + 6) as f64).powf(-delta)).sum();
    let tail = ((k_switch + 5) as f64).powf(1.0 - delta) / (delta - 1.0);
    Ok(ScaleSchedule {
        delta,
        rho,
        k_switch,
        l0,
        k_max,
        scales,
        rhos,
        a,
        product_bound: (head + tail).exp(),
    })
}

/// Hurwitz zeta `ζ(s, q) = Σ_{n≥0} (n+q)^{−s}` for `s > 1`, `q > 0`, by
/// Euler–Maclaurin summation after shifting `q` past 16.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    debug_assert!(s > 1.0 && q > 0.0);
    // B_{2j} / (2j)!
    const B: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
        1.0 / 74724249600.0,
        -3617.0 / 10670622842880000.0,
    ];
    let shift = (16.0 - q).max(0.0).ceil() as usize;
    let mut head = 0.0;
    for n in 0..shift {
        head += (q + n as f64).powf(-s);
    }
    let a = q + shift as f64;
    let mut sum = a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
    // term j: B_{2j}/(2j)! · s(s+1)…(s+2j−2) · a^{−s−2j+1}
    let mut poch = s;
    let mut pow = a.powf(-s - 1.0);
    for (j, b) in B.iter().enumerate() {
        sum += b * poch * pow;
        let m = 2.0 * j as f64;
        poch *= (s + m + 1.0) * (s + m + 2.0);
        pow /= a * a;
    }
    head + sum
}
