use super::env::ConductanceEnvironment;
use crate::environments::{PassageWeights, WeightMode};
use crate::error::Result;
use crate::fpp::{dijkstra, DistanceMap, MetricTag};

/// `(1 ∧ (m(x) ∧ m(y))/a(x,y))^{1/2}`, or `∞` when `a = 0`.
pub fn intrinsic_edge_weights(env: &ConductanceEnvironment, m: &[f64]) -> Result<PassageWeights> {
    let lat = &env.lattice;
    let values = (0..lat.num_edges())
        .map(|e| {
            let a = env.conductance[e];
            if a == 0.0 {
                return f64::INFINITY;
            }
            let (x, y) = lat.edge_endpoints(e);
            (m[x].min(m[y]) / a).min(1.0).sqrt()
        })
        .collect();
    PassageWeights::new(lat.clone(), WeightMode::Edge, values)
}

fn metric(env: &ConductanceEnvironment, weights: PassageWeights, sources: &[usize], tag: MetricTag) -> Result<DistanceMap> {
    let distances = dijkstra(&weights, sources, None)?;
    Ok(DistanceMap { lattice: env.lattice.clone(), sources: sources.to_vec(), distances, metric: tag })
}

/// Intrinsic metric `d_θ`.
pub fn theta_metric(env: &ConductanceEnvironment, sources: &[usize]) -> Result<DistanceMap> {
    let w = intrinsic_edge_weights(env, &env.theta)?;
    metric(env, w, sources, MetricTag::DTheta)
}

/// Agmon metric `d_κ`.
pub fn kappa_metric(env: &ConductanceEnvironment, sources: &[usize]) -> Result<DistanceMap> {
    let w = intrinsic_edge_weights(env, &env.kappa)?;
    metric(env, w, sources, MetricTag::DKappa)
}

/// Graph distance through edges with `a > 0`.
pub fn chemical_distance(env: &ConductanceEnvironment, sources: &[usize]) -> Result<DistanceMap> {
    let values = env.conductance.iter().map(|&a| if a > 0.0 { 1.0 } else { f64::INFINITY }).collect();
    let w = PassageWeights::new(env.lattice.clone(), WeightMode::Edge, values)?;
    metric(env, w, sources, MetricTag::Chemical)
}
