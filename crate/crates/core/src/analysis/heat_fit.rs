//! Shape fits for heat-kernel slices: the on-diagonal power `t^{−d/2}` and the
//! Gaussian off-diagonal factor `exp(−c |x−y|²/t)`.

use serde::{Deserialize, Serialize};

use super::stats::{linear_fit, LineFit};
use crate::error::{Error, Result};
use crate::lattice::{l2_distance, LatticeBox};
use crate::rcm::HeatKernelSlice;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianFit {
    pub t: f64,
    /// Slope of `log p(t,x,y)` against `|x−y|²/t`.
    pub slope: f64,
    pub stderr: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeatShapeFit {
    pub dim: usize,
    pub times: Vec<f64>,
    pub on_diagonal: Vec<f64>,
    /// Slope of `log p(t,x,x)` against `log t`.
    pub diagonal_slope: f64,
    pub diagonal_stderr: f64,
    pub gaussian: Vec<GaussianFit>,
    pub warnings: Vec<String>,
}

impl HeatShapeFit {
    /// `|slope + d/2|`.
    pub fn diagonal_error(&self) -> f64 {
        (self.diagonal_slope + self.dim as f64 / 2.0).abs()
    }
}

/// Fits a series of slices sharing one source. Off-diagonal targets with
/// `|x−y| > t` are dropped for that `t`; times with fewer than three usable
/// distances get no Gaussian fit and a warning.
pub fn heat_kernel_shape_fit(slices: &[HeatKernelSlice], lattice: &LatticeBox, targets: &[usize]) -> Result<HeatShapeFit> {
    if slices.len() < 2 {
        return Err(Error::InvalidParameter("at least two times are needed".into()));
    }
    let x = slices[0].source;
    if slices.iter().any(|s| s.source != x || s.values.len() != lattice.num_vertices()) {
        return Err(Error::InvalidParameter("slices must share one source and lattice".into()));
    }
    let times: Vec<f64> = slices.iter().map(|s| s.t).collect();
    let (tmin, tmax) = (times.iter().copied().fold(f64::INFINITY, f64::min), times.iter().copied().fold(0.0, f64::max));
    if !(tmin > 0.0) || tmax < 8.0 * tmin {
        return Err(Error::InvalidParameter(format!("time grid {tmin}..{tmax} must be positive and span a factor 8")));
    }
    let on_diagonal: Vec<f64> = slices.iter().map(|s| s.values[x]).collect();
    if on_diagonal.iter().any(|p| !(*p > 0.0)) {
        return Err(Error::Degenerate("non-positive on-diagonal value".into()));
    }
    let lt: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let lp: Vec<f64> = on_diagonal.iter().map(|p| p.ln()).collect();
    let diag: LineFit = linear_fit(&lt, &lp, None)?;

    let xc = lattice.coords(x);
    let mut warnings = Vec::new();
    let mut gaussian = Vec::new();
    for s in slices {
        let mut r2 = Vec::new();
        let mut lv = Vec::new();
        for &y in targets {
            let r = l2_distance(&xc, &lattice.coords(y));
            if r <= s.t && s.values[y] > 0.0 {
                r2.push(r * r / s.t);
                lv.push(s.values[y].ln());
            }
        }
        let mut distinct = r2.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        if distinct.len() < 3 {
            warnings.push(format!("t = {}: fewer than 3 usable distances, no Gaussian fit", s.t));
            continue;
        }
        let f = linear_fit(&r2, &lv, None)?;
        gaussian.push(GaussianFit { t: s.t, slope: f.slope, stderr: f.slope_stderr, pairs: r2.len() });
    }
    Ok(HeatShapeFit {
        dim: lattice.dim(),
        times,
        on_diagonal,
        diagonal_slope: diag.slope,
        diagonal_stderr: diag.slope_stderr,
        gaussian,
        warnings,
    })
}
