//! Confidence intervals and small least-squares fits.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Two-sided standard normal quantile for confidence `level`.
pub fn z_quantile(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!("confidence level must lie in (0,1), got {level}")));
    }
    let n = Normal::new(0.0, 1.0).unwrap();
    Ok(n.inverse_cdf(0.5 + 0.5 * level))
}

/// Pairwise summation; the result does not depend on how callers chunk work.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 16 {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

pub fn mean(x: &[f64]) -> f64 {
    pairwise_sum(x) / x.len() as f64
}

/// Unbiased sample variance (zero for fewer than two samples).
pub fn variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    let sq: Vec<f64> = x.iter().map(|v| (v - m) * (v - m)).collect();
    pairwise_sum(&sq) / (x.len() - 1) as f64
}

pub fn standard_error(x: &[f64]) -> f64 {
    (variance(x) / x.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub estimate: f64,
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.high - self.low)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }
}

/// Normal-approximation interval `(mean, half-width)`.
pub fn confidence_interval(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::Degenerate("at least two samples are needed".into()));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Degenerate("samples must be finite".into()));
    }
    let z = z_quantile(level)?;
    Ok((mean(samples), z * standard_error(samples)))
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, level: f64) -> Result<Interval> {
    if trials == 0 || successes > trials {
        return Err(Error::Degenerate(format!("{successes} successes out of {trials} trials")));
    }
    let z = z_quantile(level)?;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Ok(Interval { estimate: p, low: (centre - half).max(0.0), high: (centre + half).min(1.0) })
}

/// Interval for 0/1 samples: Wilson, as `(mean, half-width)` around the Wilson centre.
pub fn bernoulli_interval(samples: &[f64], level: f64) -> Result<Interval> {
    if samples.iter().any(|&x| x != 0.0 && x != 1.0) {
        return Err(Error::Degenerate("Bernoulli samples must be 0 or 1".into()));
    }
    let k = samples.iter().filter(|&&x| x == 1.0).count() as u64;
    wilson_interval(k, samples.len() as u64, level)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
}

/// Weighted least squares `y ≈ intercept + slope·x`; the slope standard
/// error uses the residual scatter when the weights are uniform.
pub fn linear_fit(x: &[f64], y: &[f64], weights: Option<&[f64]>) -> Result<LineFit> {
    let n = x.len();
    if n != y.len() || weights.is_some_and(|w| w.len() != n) {
        return Err(Error::LengthMismatch { expected: n, got: y.len() });
    }
    if n < 2 {
        return Err(Error::Degenerate("a line fit needs at least two points".into()));
    }
    let w: Vec<f64> = weights.map_or_else(|| vec![1.0; n], |w| w.to_vec());
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(&w).map(|(a, w)| a * w).sum::<f64>() / sw;
    let my = y.iter().zip(&w).map(|(a, w)| a * w).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(&w).map(|(a, w)| w * (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all abscissae coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).zip(&w).map(|((a, b), w)| w * (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .zip(&w)
        .map(|((a, b), w)| w * (b - intercept - slope * a).powi(2))
        .sum();
    let tss: f64 = y.iter().zip(&w).map(|(b, w)| w * (b - my) * (b - my)).sum();
    let slope_stderr = if weights.is_some() {
        (1.0 / sxx).sqrt()
    } else if n > 2 {
        (rss / (n - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
        r_squared: if tss > 0.0 { 1.0 - rss / tss } else { 1.0 },
    })
}
