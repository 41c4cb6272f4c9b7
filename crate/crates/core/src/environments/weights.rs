//! Passage times on edges or vertices.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ScalarField;
use crate::error::{Error, Result};
use crate::lattice::LatticeBox;
use crate::rng::{fill_normals, open_uniform, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    Edge,
    Vertex,
}

/// Non-negative passage times, `f64::INFINITY` marking closed elements.
#[derive(Debug, Clone)]
pub struct PassageWeights {
    pub lattice: LatticeBox,
    pub mode: WeightMode,
    pub values: Vec<f64>,
    pub level_shift: f64,
}

impl PassageWeights {
    pub fn new(lattice: LatticeBox, mode: WeightMode, values: Vec<f64>) -> Result<Self> {
        let expected = match mode {
            WeightMode::Edge => lattice.num_edges(),
            WeightMode::Vertex => lattice.num_vertices(),
        };
        if values.len() != expected {
            return Err(Error::LengthMismatch { expected, got: values.len() });
        }
        if let Some(bad) = values.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::InvalidParameter(format!("passage times must be >= 0, found {bad}")));
        }
        Ok(Self { lattice, mode, values, level_shift: 0.0 })
    }

    pub fn constant(lattice: &LatticeBox, mode: WeightMode, c: f64) -> Result<Self> {
        let n = match mode {
            WeightMode::Edge => lattice.num_edges(),
            WeightMode::Vertex => lattice.num_vertices(),
        };
        Self::new(lattice.clone(), mode, vec![c; n])
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { values: self.values.iter().map(|w| w * factor).collect(), ..self.clone() }
    }

    /// Mask of zero-weight elements (edges or vertices).
    pub fn zero_mask(&self) -> Vec<bool> {
        self.values.iter().map(|&w| w == 0.0).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum IidLaw {
    Constant { c: f64 },
    /// 0 with probability `p`, 1 otherwise.
    BernoulliZero { p: f64 },
    Exponential { rate: f64 },
    LogNormal { mu: f64, sigma: f64 },
}

impl IidLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            IidLaw::Constant { c } => c >= 0.0,
            IidLaw::BernoulliZero { p } => (0.0..=1.0).contains(&p),
            IidLaw::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            IidLaw::LogNormal { mu, sigma } => mu.is_finite() && sigma >= 0.0 && sigma.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid i.i.d. law {self:?}")))
        }
    }
}

pub fn sample_iid_weights(lattice: &LatticeBox, law: IidLaw, mode: WeightMode, stream: RngStream) -> Result<PassageWeights> {
    law.validate()?;
    let n = match mode {
        WeightMode::Edge => lattice.num_edges(),
        WeightMode::Vertex => lattice.num_vertices(),
    };
    let mut rng = stream.generator();
    let values = match law {
        IidLaw::Constant { c } => vec![c; n],
        IidLaw::BernoulliZero { p } => (0..n).map(|_| if rng.gen::<f64>() < p { 0.0 } else { 1.0 }).collect(),
        IidLaw::Exponential { rate } => (0..n).map(|_| -open_uniform(&mut rng).ln() / rate).collect(),
        IidLaw::LogNormal { mu, sigma } => {
            let mut z = vec![0.0; n];
            fill_normals(&mut rng, &mut z);
            z.into_iter().map(|z| (mu + sigma * z).exp()).collect()
        }
    };
    PassageWeights::new(lattice.clone(), mode, values)
}

/// Non-increasing map from field values to passage times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "functional", rename_all = "kebab-case")]
pub enum Functional {
    /// `1{t < h}`.
    IndicatorBelow { h: f64 },
    /// Piecewise linear through `(t, f)` knots, clamped outside.
    Tabulated { knots: Vec<(f64, f64)> },
    /// `e^{−γ t}`.
    ExpDecay { gamma: f64 },
}

impl Functional {
    pub fn validate(&self) -> Result<()> {
        match self {
            Functional::IndicatorBelow { h } if h.is_nan() => Err(Error::InvalidParameter("h is NaN".into())),
            Functional::ExpDecay { gamma } if !(*gamma >= 0.0) => {
                Err(Error::InvalidParameter("exp decay needs gamma >= 0".into()))
            }
            Functional::Tabulated { knots } => {
                if knots.is_empty() {
                    return Err(Error::InvalidParameter("tabulated functional needs knots".into()));
                }
                if knots.iter().any(|&(t, f)| !t.is_finite() || !(f >= 0.0)) {
                    return Err(Error::InvalidParameter("knots must be finite with f >= 0".into()));
                }
                for w in knots.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(Error::InvalidParameter("knot abscissae must increase".into()));
                    }
                    if w[1].1 > w[0].1 {
                        return Err(Error::InvalidParameter("tabulated functional must be non-increasing".into()));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Functional::IndicatorBelow { h } => {
                if t < *h {
                    1.0
                } else {
                    0.0
                }
            }
            Functional::ExpDecay { gamma } => (-gamma * t).exp(),
            Functional::Tabulated { knots } => {
                let i = knots.partition_point(|k| k.0 <= t);
                if i == 0 {
                    knots[0].1
                } else if i == knots.len() {
                    knots[knots.len() - 1].1
                } else {
                    let (t0, f0) = knots[i - 1];
                    let (t1, f1) = knots[i];
                    f0 + (f1 - f0) * (t - t0) / (t1 - t0)
                }
            }
        }
    }
}

/// `t_x = f(φ_x + u)` in vertex mode, `t_e = ½(f(φ_{e⁻}+u) + f(φ_{e⁺}+u))` in edge mode.
pub fn weights_from_field(field: &ScalarField, functional: &Functional, level_shift: f64, mode: WeightMode) -> Result<PassageWeights> {
    functional.validate()?;
    let per_vertex: Vec<f64> = field.values.iter().map(|&p| functional.eval(p + level_shift)).collect();
    let values = match mode {
        WeightMode::Vertex => per_vertex,
        WeightMode::Edge => (0..field.lattice.num_edges())
            .map(|e| {
                let (a, b) = field.lattice.edge_endpoints(e);
                0.5 * (per_vertex[a] + per_vertex[b])
            })
            .collect(),
    };
    let mut w = PassageWeights::new(field.lattice.clone(), mode, values)?;
    w.level_shift = level_shift;
    Ok(w)
}
