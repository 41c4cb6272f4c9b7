use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::env::ConductanceEnvironment;
use super::green::{solve_green, Boundary};
use crate::analysis::stats::{linear_fit, LineFit};
use crate::error::{Error, Result};
use crate::lattice::l2_distance;

/// Pairs closer than this are left out of decay fits by default.
pub const MIN_FIT_DISTANCE: f64 = 8.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayFit {
    pub h: f64,
    pub c_hat: f64,
    pub stderr: f64,
    /// `ĉ(h)/√h` (`NaN` at `h = 0`).
    pub ratio_to_sqrt_h: f64,
    pub pairs: usize,
    pub distance_span: (f64, f64),
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayReport {
    pub fits: Vec<DecayFit>,
    /// `max/min` of `ĉ(h)/√h` over the positive part of the grid.
    pub ratio_spread: f64,
}

/// `(|x−y|, g(x,y))` for every pair, one absorbing solve per distinct `y`.
pub fn green_pairs(env: &ConductanceEnvironment, pairs: &[(usize, usize)]) -> Result<Vec<(f64, f64)>> {
    let mut targets: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    targets.sort_unstable();
    targets.dedup();
    let columns = targets
        .par_iter()
        .map(|&y| solve_green(env, y, Boundary::Absorbing))
        .collect::<Result<Vec<_>>>()?;
    let lat = &env.lattice;
    Ok(pairs
        .iter()
        .map(|&(x, y)| {
            let col = &columns[targets.binary_search(&y).unwrap()];
            (l2_distance(&lat.coords(x), &lat.coords(y)), col.values[x])
        })
        .collect())
}

fn distinct_levels(r: &[f64]) -> usize {
    let mut v: Vec<f64> = r.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    v.len()
}

/// Least squares of `log g + (d−2) log r` against `r`; the rate is minus the slope.
pub fn fit_decay_rate(samples: &[(f64, f64)], dim: usize, min_distance: f64) -> Result<(LineFit, usize, (f64, f64))> {
    let kept: Vec<(f64, f64)> = samples.iter().copied().filter(|&(r, g)| r >= min_distance && g > 0.0).collect();
    let r: Vec<f64> = kept.iter().map(|p| p.0).collect();
    if distinct_levels(&r) < 3 {
        return Err(Error::Degenerate("fewer than 3 distance levels".into()));
    }
    let y: Vec<f64> = kept.iter().map(|&(r, g)| g.ln() + (dim as f64 - 2.0) * r.ln()).collect();
    let span = (r.iter().copied().fold(f64::INFINITY, f64::min), r.iter().copied().fold(0.0, f64::max));
    Ok((linear_fit(&r, &y, None)?, kept.len(), span))
}

/// Fitted decay rate `ĉ(h)` of the Green function for every `h` of the grid,
/// on the environment with its killing scalar replaced by `h`.
pub fn fit_green_decay(
    env: &ConductanceEnvironment,
    h_grid: &[f64],
    pairs: &[(usize, usize)],
    min_distance: f64,
) -> Result<DecayReport> {
    if h_grid.is_empty() {
        return Err(Error::InvalidParameter("h grid is empty".into()));
    }
    let dim = env.lattice.dim();
    let mut fits = Vec::with_capacity(h_grid.len());
    for &h in h_grid {
        let e = env.with_h(h)?;
        let samples = green_pairs(&e, pairs)?;
        let (fit, n, span) = fit_decay_rate(&samples, dim, min_distance)?;
        let mut warnings = Vec::new();
        if span.1 < 4.0 * span.0 {
            warnings.push(format!("pair distances span {:.1}..{:.1}, less than a factor 4", span.0, span.1));
        }
        if dim < 3 {
            warnings.push("decay fits assume d >= 3".into());
        }
        let c = -fit.slope;
        fits.push(DecayFit {
            h,
            c_hat: c,
            stderr: fit.slope_stderr,
            ratio_to_sqrt_h: if h > 0.0 { c / h.sqrt() } else { f64::NAN },
            pairs: n,
            distance_span: span,
            warnings,
        });
    }
    let ratios: Vec<f64> = fits.iter().map(|f| f.ratio_to_sqrt_h).filter(|r| r.is_finite()).collect();
    let ratio_spread = if ratios.is_empty() {
        f64::NAN
    } else {
        ratios.iter().copied().fold(0.0, f64::max) / ratios.iter().copied().fold(f64::INFINITY, f64::min)
    };
    Ok(DecayReport { fits, ratio_spread })
}

/// Slope of `log g` against `log |x−y|` over pairs with `r_min ≤ |x−y| ≤ r_max`.
pub fn fit_green_power(samples: &[(f64, f64)], r_min: f64, r_max: f64) -> Result<LineFit> {
    let kept: Vec<(f64, f64)> = samples.iter().copied().filter(|&(r, g)| r >= r_min && r <= r_max && g > 0.0).collect();
    if distinct_levels(&kept.iter().map(|p| p.0).collect::<Vec<_>>()) < 3 {
        return Err(Error::Degenerate("fewer than 3 distance levels".into()));
    }
    let x: Vec<f64> = kept.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = kept.iter().map(|p| p.1.ln()).collect();
    linear_fit(&x, &y, None)
}

/// Decay rate of the massive Green function on a line segment: solves
/// `(2 + h) g(i) − g(i−1) − g(i+1) = δ_{i,0}` on `[−n, n]` with zero
/// ends by the tridiagonal algorithm and reads `−log(g(k+1)/g(k))` at `k = n/4`.
/// The exact infinite-line value is `arccosh(1 + h/2)`.
pub fn line_massive_rate(h: f64, n: usize) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter("line rate needs h > 0".into()));
    }
    let m = 2 * n + 1;
    let diag = 2.0 + h;
    let mut rhs = vec![0.0; m];
    rhs[n] = 1.0;
    // Thomas algorithm with unit off-diagonals −1
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    c[0] = -1.0 / diag;
    d[0] = rhs[0] / diag;
    for i in 1..m {
        let denom = diag + c[i - 1];
        c[i] = -1.0 / denom;
        d[i] = (rhs[i] + d[i - 1]) / denom;
    }
    let mut g = vec![0.0; m];
    g[m - 1] = d[m - 1];
    for i in (0..m - 1).rev() {
        g[i] = d[i] - c[i] * g[i + 1];
    }
    let k = n + n / 4;
    Ok((g[k] / g[k + 1]).ln())
}
