//! Replica estimators: time constant, growth exponent, tail curve,
//! zero-cluster connectivity and subadditivity checks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distance::dijkstra;
use crate::analysis::stats::{confidence_interval, linear_fit, mean, variance, wilson_interval, z_quantile, Interval};
use crate::environments::{
    sample_gff_dirichlet, sample_iid_weights, weights_from_field, Functional, IidLaw, InterlacementSampler, PassageWeights,
    WeightMode,
};
use crate::error::{Error, Result};
use crate::lattice::{label_clusters, LatticeBox, OpenMask};
use crate::rng::RngStream;

/// How passage times are drawn on a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum WeightModel {
    Iid { law: IidLaw, mode: WeightMode },
    /// `f(φ + u)` for a Dirichlet GFF sampled on the box itself.
    Gff { functional: Functional, level_shift: f64, mode: WeightMode },
    /// `f(L_{·,u})` for occupation times at level `u`.
    Interlacement { u: f64, functional: Functional, ambient_margin: usize, mode: WeightMode },
}

impl WeightModel {
    pub fn mode(&self) -> WeightMode {
        match self {
            WeightModel::Iid { mode, .. } | WeightModel::Gff { mode, .. } | WeightModel::Interlacement { mode, .. } => *mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            WeightModel::Iid { law, .. } => law.validate(),
            WeightModel::Gff { functional, level_shift, .. } => {
                if !level_shift.is_finite() {
                    return Err(Error::InvalidParameter("level shift must be finite".into()));
                }
                functional.validate()
            }
            WeightModel::Interlacement { u, functional, .. } => {
                if !(*u > 0.0) || !u.is_finite() {
                    return Err(Error::InvalidParameter("interlacement level u must be positive".into()));
                }
                functional.validate()
            }
        }
    }

    pub fn sample(&self, lattice: &LatticeBox, stream: RngStream) -> Result<PassageWeights> {
        match self {
            WeightModel::Iid { law, mode } => sample_iid_weights(lattice, *law, *mode, stream),
            WeightModel::Gff { functional, level_shift, mode } => {
                let field = sample_gff_dirichlet(lattice, stream)?;
                weights_from_field(&field, functional, *level_shift, *mode)
            }
            WeightModel::Interlacement { u, functional, ambient_margin, mode } => {
                let sampler = InterlacementSampler::new(lattice, *ambient_margin)?;
                let field = sampler.sample(*u, stream)?;
                weights_from_field(&field, functional, 0.0, *mode)
            }
        }
    }
}

/// Box holding `0` and `n·x` with `padding` extra sites on every side.
pub fn padded_segment_box(direction: &[i64], n_max: u64, padding: usize) -> Result<LatticeBox> {
    if direction.is_empty() || direction.iter().all(|&c| c == 0) {
        return Err(Error::InvalidParameter("direction must be a non-zero vector".into()));
    }
    let p = padding as i64;
    let n = n_max as i64;
    let offset: Vec<i64> = direction.iter().map(|&c| (c * n).min(0) - p).collect();
    let sides: Vec<usize> = direction.iter().map(|&c| ((c * n).abs() + 2 * p + 1) as usize).collect();
    LatticeBox::new(&sides, &offset)
}

/// Default padding: a quarter of the largest displacement, at least one site.
pub fn default_padding(direction: &[i64], n_max: u64) -> usize {
    let span = direction.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0) * n_max;
    (span.div_ceil(4)).max(1) as usize
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelStats {
    pub n: u64,
    /// Mean of `d(0, n x)/n`; `∞` when any replica is censored.
    pub mean: f64,
    pub variance: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub half_width: f64,
    pub censored: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeConstantEstimate {
    pub direction: Vec<i64>,
    pub levels: Vec<LevelStats>,
    pub replicas: usize,
    pub confidence: f64,
    pub padding: usize,
    pub box_sides: Vec<usize>,
    /// Mean at the largest level.
    pub mu_hat: f64,
    pub mu_interval: Interval,
    /// `true` when the means are non-increasing along consecutive levels.
    pub subadditive_trend: bool,
    /// `samples[r][i] = d(0, n_i x)` for replica `r`.
    pub samples: Vec<Vec<f64>>,
}

impl TimeConstantEstimate {
    /// Summaries from raw distances `samples[r][i] = d(0, n_i x)`.
    pub fn from_distances(
        direction: &[i64],
        n_levels: &[u64],
        samples: Vec<Vec<f64>>,
        confidence: f64,
        padding: usize,
        box_sides: Vec<usize>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Degenerate("no replicas".into()));
        }
        let z = z_quantile(confidence)?;
        let mut levels = Vec::with_capacity(n_levels.len());
        for (i, &n) in n_levels.iter().enumerate() {
            let ratios: Vec<f64> = samples.iter().map(|s| s[i] / n as f64).collect();
            let censored = ratios.iter().filter(|r| r.is_infinite()).count();
            let stats = if censored > 0 {
                LevelStats {
                    n,
                    mean: f64::INFINITY,
                    variance: f64::NAN,
                    ci_low: f64::INFINITY,
                    ci_high: f64::INFINITY,
                    half_width: f64::NAN,
                    censored,
                }
            } else {
                let m = mean(&ratios);
                let var = variance(&ratios);
                let hw = if ratios.len() >= 2 { z * (var / ratios.len() as f64).sqrt() } else { f64::INFINITY };
                LevelStats { n, mean: m, variance: var, ci_low: (m - hw).max(0.0), ci_high: m + hw, half_width: hw, censored }
            };
            levels.push(stats);
        }
        let last = levels.last().ok_or_else(|| Error::InvalidParameter("no levels".into()))?;
        let mu_interval = Interval { estimate: last.mean, low: last.ci_low, high: last.ci_high };
        let subadditive_trend = levels.windows(2).all(|w| w[1].mean <= w[0].mean);
        Ok(Self {
            direction: direction.to_vec(),
            mu_hat: last.mean,
            mu_interval,
            subadditive_trend,
            replicas: samples.len(),
            confidence,
            padding,
            box_sides,
            levels,
            samples,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.levels.last().map_or(f64::NAN, |l| l.half_width)
    }
}

fn check_levels(n_levels: &[u64]) -> Result<()> {
    if n_levels.is_empty() || n_levels[0] == 0 || n_levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("levels must be positive and strictly increasing".into()));
    }
    Ok(())
}

/// Distances `d(0, n x)` for every level on one weight realization.
pub fn level_distances(weights: &PassageWeights, direction: &[i64], n_levels: &[u64]) -> Result<Vec<f64>> {
    let lat = &weights.lattice;
    let origin = vec![0i64; lat.dim()];
    let source = lat.index_of(&origin).ok_or(Error::OutsideBox(origin))?;
    let targets = n_levels
        .iter()
        .map(|&n| {
            let x: Vec<i64> = direction.iter().map(|c| c * n as i64).collect();
            lat.index_of(&x).ok_or(Error::OutsideBox(x))
        })
        .collect::<Result<Vec<_>>>()?;
    let d = dijkstra(weights, &[source], Some(&targets))?;
    Ok(targets.iter().map(|&t| d[t]).collect())
}

/// Per-level means of `d(0, n x)/n` over independent replicas on a padded box.
///
/// Replica `r` uses `stream.child(r)`; results are merged in replica order,
/// so the worker count never changes the output.
pub fn estimate_time_constant(
    model: &WeightModel,
    direction: &[i64],
    n_levels: &[u64],
    replicas: usize,
    padding: Option<usize>,
    confidence: f64,
    stream: RngStream,
) -> Result<TimeConstantEstimate> {
    check_levels(n_levels)?;
    model.validate()?;
    if replicas == 0 {
        return Err(Error::InvalidParameter("replicas must be >= 1".into()));
    }
    let n_max = *n_levels.last().unwrap();
    let padding = padding.unwrap_or_else(|| default_padding(direction, n_max));
    let lat = padded_segment_box(direction, n_max, padding)?;
    let samples = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let w = model.sample(&lat, stream.child(r as u64))?;
            level_distances(&w, direction, n_levels)
        })
        .collect::<Result<Vec<_>>>()?;
    TimeConstantEstimate::from_distances(direction, n_levels, samples, confidence, padding, lat.sides().to_vec())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthFit {
    pub exponent: f64,
    pub stderr: f64,
    pub band: (f64, f64),
    /// `1 − (d−1)/q` when `q` was supplied.
    pub lower_bound: Option<f64>,
    pub satisfies_bound: Option<bool>,
    pub means: Vec<f64>,
}

/// Least-squares slope of `log E d(0, n x)` against `log n`.
pub fn growth_exponent(
    model: &WeightModel,
    direction: &[i64],
    n_levels: &[u64],
    replicas: usize,
    q: Option<f64>,
    tolerance: f64,
    stream: RngStream,
) -> Result<GrowthFit> {
    if n_levels.len() < 3 {
        return Err(Error::InvalidParameter("growth fit needs at least 3 levels".into()));
    }
    let est = estimate_time_constant(model, direction, n_levels, replicas, None, 0.95, stream)?;
    let means: Vec<f64> = (0..n_levels.len())
        .map(|i| mean(&est.samples.iter().map(|s| s[i]).collect::<Vec<_>>()))
        .collect();
    if means.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
        return Err(Error::Degenerate("growth fit needs finite positive mean distances".into()));
    }
    let x: Vec<f64> = n_levels.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = means.iter().map(|m| m.ln()).collect();
    let fit = linear_fit(&x, &y, None)?;
    let z = z_quantile(0.95)?;
    let lower_bound = q.map(|q| 1.0 - (direction.len() as f64 - 1.0) / q);
    Ok(GrowthFit {
        exponent: fit.slope,
        stderr: fit.slope_stderr,
        band: (fit.slope - z * fit.slope_stderr, fit.slope + z * fit.slope_stderr),
        satisfies_bound: lower_bound.map(|b| fit.slope >= b - tolerance),
        lower_bound,
        means,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailPoint {
    pub n: u64,
    pub successes: u64,
    pub trials: u64,
    pub interval: Interval,
}

/// Empirical `P(d(0, n x) ≤ C n)` per level with Wilson intervals.
pub fn tail_probability_curve(
    model: &WeightModel,
    direction: &[i64],
    c: f64,
    n_levels: &[u64],
    replicas: usize,
    confidence: f64,
    stream: RngStream,
) -> Result<Vec<TailPoint>> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter("C must be positive".into()));
    }
    let est = estimate_time_constant(model, direction, n_levels, replicas, None, confidence, stream)?;
    tail_from_estimate(&est, c, confidence)
}

pub fn tail_from_estimate(est: &TimeConstantEstimate, c: f64, confidence: f64) -> Result<Vec<TailPoint>> {
    est.levels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let k = est.samples.iter().filter(|s| s[i] <= c * l.n as f64).count() as u64;
            let trials = est.samples.len() as u64;
            Ok(TailPoint { n: l.n, successes: k, trials, interval: wilson_interval(k, trials, confidence)? })
        })
        .collect()
}

/// Whether `source` and `target` are joined through zero-weight elements.
///
/// Edge mode uses the zero-weight edges (so a vertex is always joined to
/// itself); vertex mode needs every vertex on the path, endpoints included,
/// to have zero weight. In both modes the answer equals `d(source, target) == 0`.
pub fn zero_cluster_criterion(weights: &PassageWeights, source: usize, target: usize) -> Result<bool> {
    let n = weights.lattice.num_vertices();
    if source >= n || target >= n {
        return Err(Error::InvalidGeometry("vertex outside the box".into()));
    }
    let mask = weights.zero_mask();
    let open = match weights.mode {
        WeightMode::Edge => OpenMask::Edges(&mask),
        WeightMode::Vertex => OpenMask::Vertices(&mask),
    };
    Ok(label_clusters(&weights.lattice, open)?.connected(source, target))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubadditivityCheck {
    pub whole: f64,
    pub first: f64,
    pub second: f64,
    pub holds: bool,
}

/// `d(s, s+2n x) ≤ d(s, s+n x) + d(s+n x, s+2n x)` on one realization;
/// the second term is the first window's distance in the shifted environment.
pub fn subadditivity_check(weights: &PassageWeights, start: &[i64], direction: &[i64], n: u64) -> Result<SubadditivityCheck> {
    let lat = &weights.lattice;
    let point = |k: i64| -> Result<usize> {
        let x: Vec<i64> = start.iter().zip(direction).map(|(s, c)| s + k * c * n as i64).collect();
        lat.index_of(&x).ok_or(Error::OutsideBox(x))
    };
    let (a, b, c) = (point(0)?, point(1)?, point(2)?);
    let from_a = dijkstra(weights, &[a], Some(&[b, c]))?;
    let from_b = dijkstra(weights, &[b], Some(&[c]))?;
    let whole = from_a[c];
    let (first, second) = (from_a[b], from_b[c]);
    Ok(SubadditivityCheck { whole, first, second, holds: whole <= first + second })
}

/// Normal-approximation interval helper reused by the runner.
pub fn mean_interval(samples: &[f64], confidence: f64) -> Result<Interval> {
    let (m, h) = confidence_interval(samples, confidence)?;
    Ok(Interval { estimate: m, low: m - h, high: m + h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpp::distance::fpp_distances;

    #[test]
    fn padded_box_geometry() {
        let b = padded_segment_box(&[1, 0], 128, 32).unwrap();
        assert_eq!(b.sides(), &[193, 65]);
        assert!(b.contains(&[0, 0]) && b.contains(&[128, 0]));
        assert_eq!(default_padding(&[1, 0], 128), 32);
        let b = padded_segment_box(&[-1, 2], 3, 1).unwrap();
        assert!(b.contains(&[-3, 6]) && b.contains(&[0, 0]));
        assert!(padded_segment_box(&[0, 0], 3, 1).is_err());
    }

    #[test]
    fn constant_weights_give_exact_time_constant() {
        let model = WeightModel::Iid { law: IidLaw::Constant { c: 1.5 }, mode: WeightMode::Edge };
        let est = estimate_time_constant(&model, &[1, 0, 0], &[2, 4, 8], 3, None, 0.95, RngStream::new(0, 0)).unwrap();
        for l in &est.levels {
            assert_eq!(l.mean, 1.5);
            assert_eq!(l.half_width, 0.0);
        }
        assert_eq!(est.mu_hat, 1.5);
        assert!(est.subadditive_trend);
    }

    #[test]
    fn rejects_bad_levels() {
        let model = WeightModel::Iid { law: IidLaw::Constant { c: 1.0 }, mode: WeightMode::Edge };
        for levels in [&[][..], &[0, 1][..], &[4, 2][..]] {
            assert!(estimate_time_constant(&model, &[1, 0], levels, 2, None, 0.95, RngStream::new(0, 0)).is_err());
        }
    }

    #[test]
    fn censored_levels_are_reported_not_raised() {
        let model = WeightModel::Iid { law: IidLaw::Constant { c: f64::INFINITY }, mode: WeightMode::Edge };
        let est = estimate_time_constant(&model, &[1, 0], &[1, 2], 2, Some(1), 0.95, RngStream::new(0, 0)).unwrap();
        assert!(est.mu_hat.is_infinite());
        assert_eq!(est.levels[0].censored, 2);
    }

    #[test]
    fn supercritical_zeros_give_small_time_constant() {
        let model = WeightModel::Iid { law: IidLaw::BernoulliZero { p: 0.9 }, mode: WeightMode::Edge };
        let est = estimate_time_constant(&model, &[1, 0], &[8, 32], 20, None, 0.95, RngStream::new(3, 0)).unwrap();
        assert!(est.mu_hat < 0.05, "{}", est.mu_hat);
        let model = WeightModel::Iid { law: IidLaw::BernoulliZero { p: 0.1 }, mode: WeightMode::Edge };
        let est = estimate_time_constant(&model, &[1, 0], &[8, 32], 20, None, 0.95, RngStream::new(3, 0)).unwrap();
        assert!(est.mu_interval.low > 0.3, "{:?}", est.mu_interval);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let model = WeightModel::Iid { law: IidLaw::Exponential { rate: 1.0 }, mode: WeightMode::Edge };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
                estimate_time_constant(&model, &[1, 1], &[4, 8], 6, None, 0.95, RngStream::new(9, 0)).unwrap()
            })
        };
        assert_eq!(run(1).samples, run(3).samples);
    }

    #[test]
    fn growth_exponent_of_constant_and_scaled_weights() {
        let levels = [4, 8, 16, 32];
        let unit = WeightModel::Iid { law: IidLaw::Constant { c: 1.0 }, mode: WeightMode::Edge };
        let twice = WeightModel::Iid { law: IidLaw::Constant { c: 2.0 }, mode: WeightMode::Edge };
        let a = growth_exponent(&unit, &[1, 0], &levels, 2, Some(4.0), 0.05, RngStream::new(1, 0)).unwrap();
        let b = growth_exponent(&twice, &[1, 0], &levels, 2, Some(4.0), 0.05, RngStream::new(1, 0)).unwrap();
        assert!((a.exponent - 1.0).abs() < 0.01);
        assert!((a.exponent - b.exponent).abs() < 1e-12);
        assert_eq!(a.satisfies_bound, Some(true));
        assert!(growth_exponent(&unit, &[1, 0], &[4, 8], 2, None, 0.0, RngStream::new(1, 0)).is_err());
    }

    #[test]
    fn tail_curve_for_constant_weights() {
        let model = WeightModel::Iid { law: IidLaw::Constant { c: 2.0 }, mode: WeightMode::Edge };
        let below = tail_probability_curve(&model, &[1, 0], 1.9, &[1, 2, 4], 5, 0.95, RngStream::new(0, 0)).unwrap();
        assert!(below.iter().all(|p| p.successes == 0));
        let above = tail_probability_curve(&model, &[1, 0], 2.0, &[1, 2, 4], 5, 0.95, RngStream::new(0, 0)).unwrap();
        assert!(above.iter().all(|p| p.successes == 5));
        assert!(tail_probability_curve(&model, &[1, 0], 0.0, &[1], 5, 0.95, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn zero_cluster_matches_dijkstra() {
        let b = LatticeBox::cube(2, 10).unwrap();
        for seed in 0..30 {
            for mode in [WeightMode::Edge, WeightMode::Vertex] {
                let w = sample_iid_weights(&b, IidLaw::BernoulliZero { p: 0.55 }, mode, RngStream::new(seed, 0)).unwrap();
                let d = fpp_distances(&w, &[0]).unwrap();
                for t in 0..b.num_vertices() {
                    assert_eq!(zero_cluster_criterion(&w, 0, t).unwrap(), d.get(t) == 0.0);
                }
            }
        }
        let zero = PassageWeights::constant(&b, WeightMode::Edge, 0.0).unwrap();
        assert!(zero_cluster_criterion(&zero, 0, 99).unwrap());
        let one = PassageWeights::constant(&b, WeightMode::Edge, 1.0).unwrap();
        assert!(zero_cluster_criterion(&one, 5, 5).unwrap());
        assert!(!zero_cluster_criterion(&one, 5, 6).unwrap());
    }

    #[test]
    fn subadditivity_on_samples() {
        let b = LatticeBox::new(&[40, 20], &[-5, -10]).unwrap();
        for seed in 0..10 {
            let w = sample_iid_weights(&b, IidLaw::LogNormal { mu: 0.0, sigma: 1.0 }, WeightMode::Edge, RngStream::new(seed, 1)).unwrap();
            assert!(subadditivity_check(&w, &[0, 0], &[1, 0], 12).unwrap().holds);
        }
    }
}
