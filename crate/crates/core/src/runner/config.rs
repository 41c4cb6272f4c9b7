//! Experiment configuration and the precondition checks behind `validate`.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{BoxFunctional, DecouplingGeometry, FieldModel, Pairing};
use crate::environments::min_ambient_margin;
use crate::fpp::WeightModel;
use crate::lattice::LatticeBox;

pub const SCHEMA_VERSION: u32 = 1;

fn default_confidence() -> f64 {
    0.95
}
fn default_one() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}
fn default_min_distance() -> f64 {
    crate::rcm::MIN_FIT_DISTANCE
}
fn default_krylov() -> HeatMethodSpec {
    HeatMethodSpec::Krylov { tolerance: 1e-8 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "schema_default")]
    pub schema_version: u32,
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Write binary snapshots of sampled fields and solved columns.
    #[serde(default)]
    pub snapshots: bool,
    pub experiment: Experiment,
}

fn schema_default() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "environment", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    Homogeneous {
        dim: usize,
        side: usize,
        #[serde(default = "default_one")]
        conductance: f64,
        #[serde(default = "default_one")]
        kappa: f64,
    },
    /// `a = exp(β(φ_x + φ_y))` from a Dirichlet GFF on the box.
    Gff {
        dim: usize,
        side: usize,
        beta: f64,
        #[serde(default = "default_true")]
        include_killing: bool,
    },
}

impl EnvironmentSpec {
    pub fn dim(&self) -> usize {
        match *self {
            EnvironmentSpec::Homogeneous { dim, .. } | EnvironmentSpec::Gff { dim, .. } => dim,
        }
    }

    pub fn side(&self) -> usize {
        match *self {
            EnvironmentSpec::Homogeneous { side, .. } | EnvironmentSpec::Gff { side, .. } => side,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HeatMethodSpec {
    ExactSmall,
    Krylov { tolerance: f64 },
    MonteCarlo { walks: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    /// Empirical `E[φ_x φ_y]` against the Dirichlet Green function.
    GffCovariance {
        dim: usize,
        side: usize,
        replicas: usize,
        /// Pairs of absolute coordinates; defaults to the center against points along axis 0.
        #[serde(default)]
        pairs: Option<Vec<(Vec<i64>, Vec<i64>)>>,
    },
    FppTimeConstant {
        model: WeightModel,
        direction: Vec<i64>,
        n_levels: Vec<u64>,
        replicas: usize,
        #[serde(default)]
        padding: Option<usize>,
        #[serde(default = "default_confidence")]
        confidence: f64,
    },
    Shape {
        model: WeightModel,
        dim: usize,
        t_levels: Vec<f64>,
        box_radius: usize,
        replicas: usize,
    },
    Crossing {
        dim: usize,
        l_grid: Vec<usize>,
        h_grid: Vec<f64>,
        margin: usize,
        replicas: usize,
        #[serde(default = "default_confidence")]
        confidence: f64,
    },
    Decoupling {
        field: FieldModel,
        dim: usize,
        side: usize,
        separations: Vec<usize>,
        #[serde(default)]
        margin: usize,
        u: f64,
        u_hat: f64,
        f1: BoxFunctional,
        f2: BoxFunctional,
        replicas: usize,
        #[serde(default)]
        tolerance: f64,
        #[serde(default = "default_confidence")]
        confidence: f64,
        pairing: Pairing,
    },
    GreenDecay {
        env: EnvironmentSpec,
        h_grid: Vec<f64>,
        /// Source coordinates; defaults to a quarter of the side along axis 0, centered elsewhere.
        #[serde(default)]
        source: Option<Vec<i64>>,
        /// Offsets `r` along axis 0 of the partner points `source + r e₁`.
        r_min: usize,
        r_max: usize,
        #[serde(default = "default_min_distance")]
        min_distance: f64,
    },
    HeatKernel {
        env: EnvironmentSpec,
        times: Vec<f64>,
        #[serde(default)]
        source: Option<Vec<i64>>,
        #[serde(default = "default_krylov")]
        method: HeatMethodSpec,
        /// Largest offset along axis 0 used in the Gaussian fits.
        #[serde(default)]
        r_max: usize,
        #[serde(default)]
        h: f64,
    },
    InterlacementOccupation {
        dim: usize,
        side: usize,
        #[serde(default)]
        ambient_margin: Option<usize>,
        u_grid: Vec<f64>,
        replicas: usize,
    },
    ScheduleDiagnostics {
        delta: f64,
        rho: f64,
        k_switch: usize,
        l0: f64,
        k_max: usize,
        #[serde(default = "default_one")]
        epsilon: f64,
    },
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::GffCovariance { .. } => "gff-covariance",
            Experiment::FppTimeConstant { .. } => "fpp-time-constant",
            Experiment::Shape { .. } => "shape",
            Experiment::Crossing { .. } => "crossing",
            Experiment::Decoupling { .. } => "decoupling",
            Experiment::GreenDecay { .. } => "green-decay",
            Experiment::HeatKernel { .. } => "heat-kernel",
            Experiment::InterlacementOccupation { .. } => "interlacement-occupation",
            Experiment::ScheduleDiagnostics { .. } => "schedule-diagnostics",
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// SHA-256 of the canonical JSON form (object keys sorted), so key order
    /// in the source file does not matter.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let canonical = serde_json::to_string(&value).expect("value serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Every violated precondition; empty when the config can run.
    pub fn validate(&self) -> Vec<String> {
        let mut issues = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            issues.push(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        validate_experiment(&self.experiment, &mut issues);
        issues
    }
}

fn check_box(dim: usize, side: usize, issues: &mut Vec<String>) {
    if dim == 0 {
        issues.push("dim must be >= 1".into());
    }
    if side == 0 {
        issues.push("side must be >= 1".into());
    }
}

fn check_confidence(c: f64, issues: &mut Vec<String>) {
    if !(c > 0.0 && c < 1.0) {
        issues.push(format!("confidence {c} must lie in (0, 1)"));
    }
}

fn check_replicas(r: usize, min: usize, issues: &mut Vec<String>) {
    if r < min {
        issues.push(format!("replicas must be >= {min}"));
    }
}

fn check_model(model: &WeightModel, dim: usize, issues: &mut Vec<String>) {
    if let Err(e) = model.validate() {
        issues.push(e.to_string());
    }
    if let WeightModel::Interlacement { .. } = model {
        if dim < 3 {
            issues.push(format!("interlacement weights require d >= 3, got d = {dim}"));
        }
    }
}

fn check_env(env: &EnvironmentSpec, issues: &mut Vec<String>) {
    check_box(env.dim(), env.side(), issues);
    match *env {
        EnvironmentSpec::Homogeneous { conductance, kappa, .. } => {
            if !(conductance > 0.0 && conductance.is_finite()) {
                issues.push("conductance must be positive and finite".into());
            }
            if !(kappa >= 0.0 && kappa.is_finite()) {
                issues.push("kappa must be non-negative and finite".into());
            }
        }
        EnvironmentSpec::Gff { beta, .. } => {
            if !beta.is_finite() {
                issues.push("beta must be finite".into());
            }
        }
    }
}

fn check_h(h: f64, issues: &mut Vec<String>) {
    if !(0.0..=1.0).contains(&h) {
        issues.push(format!("killing scalar h = {h} must satisfy h ∈ [0,1]"));
    }
}

fn check_source(source: &Option<Vec<i64>>, env: &EnvironmentSpec, issues: &mut Vec<String>) {
    if let Some(s) = source {
        if s.len() != env.dim() || s.iter().any(|&c| c < 0 || c >= env.side() as i64) {
            issues.push(format!("source {s:?} is not a vertex of the box"));
        }
    }
}

fn validate_experiment(exp: &Experiment, issues: &mut Vec<String>) {
    match exp {
        Experiment::GffCovariance { dim, side, replicas, pairs } => {
            check_box(*dim, *side, issues);
            check_replicas(*replicas, 2, issues);
            if let Some(pairs) = pairs {
                if let Ok(b) = LatticeBox::cube(*dim, *side) {
                    for (x, y) in pairs {
                        if !b.contains(x) || !b.contains(y) {
                            issues.push(format!("pair ({x:?}, {y:?}) is outside the box"));
                        }
                    }
                }
            }
        }
        Experiment::FppTimeConstant { model, direction, n_levels, replicas, confidence, .. } => {
            if direction.is_empty() || direction.iter().all(|&c| c == 0) {
                issues.push("direction must be a non-zero vector".into());
            }
            check_model(model, direction.len(), issues);
            if n_levels.is_empty() || n_levels[0] == 0 || n_levels.windows(2).any(|w| w[1] <= w[0]) {
                issues.push("n_levels must be positive and strictly increasing".into());
            }
            check_replicas(*replicas, 2, issues);
            check_confidence(*confidence, issues);
        }
        Experiment::Shape { model, dim, t_levels, box_radius, replicas } => {
            check_box(*dim, *box_radius, issues);
            check_model(model, *dim, issues);
            if t_levels.len() < 2 || t_levels[0] <= 0.0 || t_levels.windows(2).any(|w| w[1] <= w[0]) {
                issues.push("t_levels must be positive, increasing and at least two".into());
            }
            check_replicas(*replicas, 1, issues);
        }
        Experiment::Crossing { dim, l_grid, h_grid, replicas, confidence, .. } => {
            check_box(*dim, 1, issues);
            if l_grid.is_empty() || l_grid.contains(&0) {
                issues.push("l_grid must be non-empty with positive scales".into());
            }
            if h_grid.is_empty() || h_grid.iter().any(|h| !h.is_finite()) {
                issues.push("h_grid must be non-empty and finite".into());
            }
            check_replicas(*replicas, 1, issues);
            check_confidence(*confidence, issues);
        }
        Experiment::Decoupling { field, dim, side, separations, margin, u, u_hat, replicas, confidence, .. } => {
            check_box(*dim, *side, issues);
            if separations.is_empty() || separations.contains(&0) {
                issues.push("separations must be non-empty and >= 1 (boxes may not touch)".into());
            }
            if !(u_hat <= u) {
                issues.push(format!("sprinkled level u_hat = {u_hat} must not exceed u = {u}"));
            }
            if let FieldModel::Interlacement { ambient_margin } = field {
                if *dim < 3 {
                    issues.push(format!("random interlacements require d >= 3, got d = {dim}"));
                }
                if !(*u_hat > 0.0) {
                    issues.push("interlacement levels must be positive".into());
                }
                if let (Some(m), Some(&sep)) = (ambient_margin, separations.iter().max()) {
                    let g = DecouplingGeometry { dim: *dim, side: *side, separation: sep, margin: *margin };
                    if let Ok((sampling, _, _)) = g.boxes() {
                        let min = min_ambient_margin(&sampling);
                        if *m < min {
                            issues.push(format!("ambient_margin {m} below the minimum {min}"));
                        }
                    }
                }
            }
            check_replicas(*replicas, 2, issues);
            check_confidence(*confidence, issues);
        }
        Experiment::GreenDecay { env, h_grid, source, r_min, r_max, min_distance } => {
            check_env(env, issues);
            check_source(source, env, issues);
            if h_grid.is_empty() {
                issues.push("h_grid must be non-empty".into());
            }
            for &h in h_grid {
                check_h(h, issues);
            }
            if r_min >= r_max {
                issues.push("r_min must be below r_max".into());
            }
            if (*r_max as f64) < *min_distance {
                issues.push(format!("r_max {r_max} is below the fit cutoff {min_distance}"));
            }
            let s0 = source.as_ref().map(|s| s[0]).unwrap_or((env.side() / 4) as i64);
            if s0 + *r_max as i64 >= env.side() as i64 {
                issues.push(format!("box of side {} too small for r_max = {r_max} from the source", env.side()));
            }
        }
        Experiment::HeatKernel { env, times, source, method, r_max, h } => {
            check_env(env, issues);
            check_source(source, env, issues);
            check_h(*h, issues);
            if times.is_empty() || times.iter().any(|t| !(*t > 0.0) || !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
                issues.push("times must be positive, finite and increasing".into());
            }
            match *method {
                HeatMethodSpec::ExactSmall => {
                    if env.side().checked_pow(env.dim() as u32).map_or(true, |n| n > crate::rcm::EXACT_MAX_VERTICES) {
                        issues.push(format!("exact-small needs at most {} vertices", crate::rcm::EXACT_MAX_VERTICES));
                    }
                }
                HeatMethodSpec::Krylov { tolerance } => {
                    if !(tolerance > 0.0) {
                        issues.push("krylov tolerance must be positive".into());
                    }
                }
                HeatMethodSpec::MonteCarlo { walks } => check_replicas(walks, 2, issues),
            }
            let centre = source.as_ref().map(|s| s[0]).unwrap_or((env.side() / 2) as i64);
            if centre + *r_max as i64 >= env.side() as i64 {
                issues.push(format!("box of side {} too small for r_max = {r_max}", env.side()));
            }
        }
        Experiment::InterlacementOccupation { dim, side, ambient_margin, u_grid, replicas } => {
            check_box(*dim, *side, issues);
            if *dim < 3 {
                issues.push(format!("random interlacements require d >= 3, got d = {dim}"));
            }
            if let Some(m) = ambient_margin {
                if *m < *side {
                    issues.push(format!("ambient_margin {m} below the minimum {side}"));
                }
            }
            if u_grid.is_empty() || u_grid.iter().any(|u| !(*u > 0.0) || !u.is_finite()) {
                issues.push("u_grid must be non-empty with positive levels".into());
            }
            check_replicas(*replicas, 2, issues);
        }
        Experiment::ScheduleDiagnostics { delta, rho, l0, k_max, epsilon, .. } => {
            if !(*delta > 1.0) {
                issues.push("delta must exceed 1".into());
            }
            if !(*rho > 0.0) {
                issues.push("rho must be positive".into());
            }
            if !(*l0 >= 1.0) {
                issues.push("L0 must be >= 1".into());
            }
            if *k_max == 0 {
                issues.push("k_max must be >= 1".into());
            }
            if !(*epsilon > 0.0) {
                issues.push("epsilon must be positive".into());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(s).unwrap()
    }

    #[test]
    fn hash_ignores_key_order() {
        let a = parse(r#"{"seed":1,"experiment":{"kind":"schedule-diagnostics","delta":2,"rho":1,"k_switch":0,"l0":10,"k_max":20}}"#);
        let b = parse(r#"{"experiment":{"k_max":20,"l0":10,"k_switch":0,"rho":1,"delta":2,"kind":"schedule-diagnostics"},"seed":1}"#);
        assert_eq!(a.hash(), b.hash());
        let c = parse(r#"{"seed":2,"experiment":{"kind":"schedule-diagnostics","delta":2,"rho":1,"k_switch":0,"l0":10,"k_max":20}}"#);
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn low_dimensional_interlacement_is_reported() {
        let c = parse(r#"{"seed":1,"experiment":{"kind":"interlacement-occupation","dim":2,"side":5,"u_grid":[1.0],"replicas":10}}"#);
        assert!(c.validate().iter().any(|m| m.contains("d >= 3")));
    }

    #[test]
    fn killing_scalar_out_of_range() {
        let c = parse(
            r#"{"seed":1,"experiment":{"kind":"green-decay","env":{"environment":"homogeneous","dim":3,"side":32},"h_grid":[2.0],"r_min":8,"r_max":16}}"#,
        );
        assert!(c.validate().iter().any(|m| m.contains("h ∈ [0,1]")));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"seed":1,"bogus":0,"experiment":{"kind":"schedule-diagnostics","delta":2,"rho":1,"k_switch":0,"l0":10,"k_max":20}}"#).is_err());
    }
}
