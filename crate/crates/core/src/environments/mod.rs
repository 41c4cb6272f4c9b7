//! Random environments on a finite box: the Dirichlet Gaussian free field,
//! random-interlacement occupation times, i.i.d. baselines, and the maps
//! turning a field into passage times.

mod gff;
mod interlacement;
mod weights;

pub use gff::{dirichlet_green, dirichlet_green_column, dirichlet_laplacian_eigenvalue, sample_gff_dirichlet, sine_transform, MAX_SPECTRAL_VERTICES};
pub use interlacement::{
    campbell_mean_occupation, equilibrium_measure, exp1_green_column, min_ambient_margin, sample_interlacement_occupation,
    EquilibriumMeasure, InterlacementSampler,
};
pub use weights::{sample_iid_weights, weights_from_field, Functional, IidLaw, PassageWeights, WeightMode};

use serde::{Deserialize, Serialize};

use crate::lattice::LatticeBox;
use crate::rng::RngStream;
use crate::snapshot::SnapshotMeta;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub sampler: String,
    pub stream: Option<RngStream>,
    pub parameters: serde_json::Value,
}

/// One real value per vertex of a box.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub lattice: LatticeBox,
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl ScalarField {
    pub fn from_values(lattice: LatticeBox, values: Vec<f64>) -> crate::Result<Self> {
        if values.len() != lattice.num_vertices() {
            return Err(crate::Error::LengthMismatch { expected: lattice.num_vertices(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(crate::Error::InvalidParameter("field values must be finite".into()));
        }
        Ok(Self {
            lattice,
            values,
            provenance: Provenance { sampler: "given".into(), stream: None, parameters: serde_json::Value::Null },
        })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn snapshot_meta(&self) -> SnapshotMeta {
        let mut meta = SnapshotMeta::for_box(&self.lattice, &self.provenance.sampler, self.values.len());
        meta.parameters = self.provenance.parameters.clone();
        if let Some(s) = self.provenance.stream {
            meta.generator = Some(s.algorithm().to_string());
            meta.seed = Some(s.seed);
            meta.replica = Some(s.replica);
        }
        meta
    }
}
