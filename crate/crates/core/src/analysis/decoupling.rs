//! Sprinkled product inequalities `E^û[f₁f₂] ≤ E^u[f₁] E^u[f₂] + tol`
//! for monotone functionals on two separated boxes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{mean, z_quantile};
use crate::environments::{sample_gff_dirichlet, InterlacementSampler};
use crate::error::{Error, Result};
use crate::lattice::LatticeBox;
use crate::rng::{fill_normals, RngStream};

/// Field family indexed by a level `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "field", rename_all = "kebab-case")]
pub enum FieldModel {
    /// `φ + u` with `φ` a Dirichlet GFF on the sampling box.
    Gff,
    /// `ξ + u` with i.i.d. standard normal `ξ`.
    IidGaussian,
    /// Occupation times `L_{·,u}`, levels coupled by thinning.
    Interlacement { ambient_margin: Option<usize> },
}

/// Increasing `[0,1]`-valued functional of the field restricted to a box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "functional", rename_all = "kebab-case")]
pub enum BoxFunctional {
    /// `1{min over the box ≥ h}`.
    MinAbove { h: f64 },
    /// Fraction of box vertices with value `≥ h`.
    FractionAbove { h: f64 },
    /// `≡ 1`.
    One,
}

impl BoxFunctional {
    pub fn eval(&self, values: impl Iterator<Item = f64>) -> f64 {
        match *self {
            BoxFunctional::One => 1.0,
            BoxFunctional::MinAbove { h } => {
                let m = values.fold(f64::INFINITY, f64::min);
                if m >= h {
                    1.0
                } else {
                    0.0
                }
            }
            BoxFunctional::FractionAbove { h } => {
                let (mut k, mut n) = (0usize, 0usize);
                for v in values {
                    n += 1;
                    k += (v >= h) as usize;
                }
                k as f64 / n.max(1) as f64
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    /// One field per replica evaluated at both levels.
    Common,
    /// Separate fields for `E^û[f₁f₂]`, `E^u[f₁]` and `E^u[f₂]`.
    Independent,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecouplingGeometry {
    pub dim: usize,
    pub side: usize,
    /// ℓ∞ gap between the two boxes (at least 1).
    pub separation: usize,
    /// Extra sites around the pair of boxes in the sampling box.
    pub margin: usize,
}

impl DecouplingGeometry {
    /// `(sampling box, first box, second box)`; the boxes sit along axis 0.
    pub fn boxes(&self) -> Result<(LatticeBox, LatticeBox, LatticeBox)> {
        if self.separation == 0 {
            return Err(Error::InvalidGeometry("boxes overlap or touch (separation 0)".into()));
        }
        if self.dim == 0 || self.side == 0 {
            return Err(Error::InvalidGeometry("dimension and side must be positive".into()));
        }
        let d = self.dim;
        let first = LatticeBox::new(&vec![self.side; d], &vec![0; d])?;
        let mut off2 = vec![0i64; d];
        off2[0] = (self.side - 1 + self.separation) as i64;
        let second = LatticeBox::new(&vec![self.side; d], &off2)?;
        let m = self.margin as i64;
        let mut sides = vec![self.side + 2 * self.margin; d];
        sides[0] = 2 * self.side + self.separation - 1 + 2 * self.margin;
        let sampling = LatticeBox::new(&sides, &vec![-m; d])?;
        Ok((sampling, first, second))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub separation: usize,
    pub side: usize,
    pub u: f64,
    pub u_hat: f64,
    pub pairing: Pairing,
    pub replicas: usize,
    /// `E^û[f₁ f₂]`.
    pub joint_sprinkled: f64,
    pub mean_f1: f64,
    pub mean_f2: f64,
    /// `E^u[f₁]E^u[f₂] + tolerance − E^û[f₁f₂]`.
    pub slack: f64,
    pub slack_half_width: f64,
    pub tolerance: f64,
    pub confidence: f64,
    /// The bound is not rejected: `slack + half-width ≥ 0`.
    pub holds: bool,
}

struct Sampler {
    model: FieldModel,
    lattice: LatticeBox,
    interlacement: Option<InterlacementSampler>,
}

impl Sampler {
    fn new(model: &FieldModel, lattice: &LatticeBox) -> Result<Self> {
        let interlacement = match model {
            FieldModel::Interlacement { ambient_margin } => {
                let m = ambient_margin.unwrap_or_else(|| crate::environments::min_ambient_margin(lattice));
                Some(InterlacementSampler::new(lattice, m)?)
            }
            _ => None,
        };
        Ok(Self { model: model.clone(), lattice: lattice.clone(), interlacement })
    }

    /// Fields at each level from one stream.
    fn fields(&self, levels: &[f64], stream: RngStream) -> Result<Vec<Vec<f64>>> {
        match &self.model {
            FieldModel::Gff => {
                let phi = sample_gff_dirichlet(&self.lattice, stream)?;
                Ok(levels.iter().map(|u| phi.values.iter().map(|p| p + u).collect()).collect())
            }
            FieldModel::IidGaussian => {
                let mut xi = vec![0.0; self.lattice.num_vertices()];
                fill_normals(&mut stream.generator(), &mut xi);
                Ok(levels.iter().map(|u| xi.iter().map(|p| p + u).collect()).collect())
            }
            FieldModel::Interlacement { .. } => Ok(self
                .interlacement
                .as_ref()
                .unwrap()
                .sample_levels(levels, stream)?
                .into_iter()
                .map(|f| f.values)
                .collect()),
        }
    }
}

/// Monte Carlo check of the sprinkled product bound with a delta-method interval.
#[allow(clippy::too_many_arguments)]
pub fn decoupling_check(
    model: &FieldModel,
    geometry: &DecouplingGeometry,
    u: f64,
    u_hat: f64,
    f1: BoxFunctional,
    f2: BoxFunctional,
    replicas: usize,
    tolerance: f64,
    confidence: f64,
    pairing: Pairing,
    stream: RngStream,
) -> Result<CorrelationReport> {
    if !(u_hat <= u) {
        return Err(Error::InvalidParameter("the sprinkled level must satisfy u_hat <= u".into()));
    }
    if replicas < 2 {
        return Err(Error::InvalidParameter("at least two replicas are needed".into()));
    }
    if matches!(model, FieldModel::Interlacement { .. }) && !(u_hat > 0.0) {
        return Err(Error::InvalidParameter("interlacement levels must be positive".into()));
    }
    let (sampling, first, second) = geometry.boxes()?;
    let in1 = sampling.vertices_in(&first);
    let in2 = sampling.vertices_in(&second);
    let sampler = Sampler::new(model, &sampling)?;
    let eval = |field: &[f64], f: BoxFunctional, idx: &[usize]| f.eval(idx.iter().map(|&v| field[v]));

    // per replica: (f₁f₂ at û, f₁ at u, f₂ at u)
    let triples = (0..replicas)
        .into_par_iter()
        .map(|r| -> Result<[f64; 3]> {
            let s = stream.child(r as u64);
            match pairing {
                Pairing::Common => {
                    let f = sampler.fields(&[u_hat, u], s)?;
                    Ok([
                        eval(&f[0], f1, &in1) * eval(&f[0], f2, &in2),
                        eval(&f[1], f1, &in1),
                        eval(&f[1], f2, &in2),
                    ])
                }
                Pairing::Independent => {
                    let a = sampler.fields(&[u_hat], s.child(0))?;
                    let b = sampler.fields(&[u], s.child(1))?;
                    let c = sampler.fields(&[u], s.child(2))?;
                    Ok([
                        eval(&a[0], f1, &in1) * eval(&a[0], f2, &in2),
                        eval(&b[0], f1, &in1),
                        eval(&c[0], f2, &in2),
                    ])
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let n = replicas as f64;
    let col = |k: usize| triples.iter().map(|t| t[k]).collect::<Vec<_>>();
    let (a, b, c) = (col(0), col(1), col(2));
    let (ma, mb, mc) = (mean(&a), mean(&b), mean(&c));
    let slack = mb * mc + tolerance - ma;
    // gradient of (A, B, C) ↦ B C − A
    let g = [-1.0, mc, mb];
    let cov = |x: &[f64], mx: f64, y: &[f64], my: f64| {
        x.iter().zip(y).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (n - 1.0)
    };
    let cols = [(&a, ma), (&b, mb), (&c, mc)];
    let mut var = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            if pairing == Pairing::Independent && i != j {
                continue;
            }
            var += g[i] * g[j] * cov(cols[i].0, cols[i].1, cols[j].0, cols[j].1);
        }
    }
    let hw = z_quantile(confidence)? * (var.max(0.0) / n).sqrt();
    Ok(CorrelationReport {
        separation: geometry.separation,
        side: geometry.side,
        u,
        u_hat,
        pairing,
        replicas,
        joint_sprinkled: ma,
        mean_f1: mb,
        mean_f2: mc,
        slack,
        slack_half_width: hw,
        tolerance,
        confidence,
        holds: slack + hw >= 0.0,
    })
}
