//! Config-driven experiment runner: parses and validates an
//! [`ExperimentConfig`], executes it on a worker pool and writes a run
//! directory holding `manifest.json`, `summary.json`, CSV tables and
//! optional snapshots.

mod config;
mod output;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

pub use config::{EnvironmentSpec, Experiment, ExperimentConfig, HeatMethodSpec, SCHEMA_VERSION};
pub use output::{format_float, Cell, RunManifest, RunOutput, StageTiming, Table};

use crate::analysis::{crossing_curve, decoupling_check, heat_kernel_shape_fit, DecouplingGeometry};
use crate::environments::{exp1_green_column, sample_gff_dirichlet, InterlacementSampler, ScalarField};
use crate::error::Error;
use crate::fpp::{build_scale_schedule, estimate_time_constant, shape_convergence};
use crate::lattice::LatticeBox;
use crate::rcm::{build_gff_rcm, fit_green_decay, fit_green_power, green_pairs, heat_kernel_series, ConductanceEnvironment, HeatMethod};
use crate::rng::RngStream;
use crate::snapshot::{write_snapshot, SnapshotMeta};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "FPPLAB_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid config: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("runtime failure in stage `{stage}`: {source}")]
    Runtime {
        stage: String,
        #[source]
        source: Error,
    },
}

impl RunError {
    /// 2 for configuration problems, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Invalid(_) => 2,
            RunError::Runtime { .. } => 1,
        }
    }

    /// Machine-readable error report.
    pub fn report(&self) -> serde_json::Value {
        match self {
            RunError::Invalid(issues) => json!({ "error": "invalid-config", "exit_code": 2, "issues": issues }),
            RunError::Runtime { stage, source } => {
                json!({ "error": "runtime-failure", "exit_code": 1, "stage": stage, "message": source.to_string() })
            }
        }
    }
}

fn at<T>(stage: &str, r: crate::Result<T>) -> Result<T, RunError> {
    r.map_err(|source| RunError::Runtime { stage: stage.into(), source })
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// Worker threads; 0 lets the pool choose.
    pub workers: usize,
}

/// Reads and parses a config file; unreadable or malformed files are invalid configs.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::Invalid(vec![format!("cannot read {}: {e}", path.display())]))?;
    ExperimentConfig::from_json(&text).map_err(|e| RunError::Invalid(vec![format!("cannot parse {}: {e}", path.display())]))
}

/// Validation report for a config file: the list of violated preconditions.
pub fn validate_file(path: &Path) -> Result<Vec<String>, RunError> {
    Ok(load_config(path)?.validate())
}

/// Default run directory, `runs/<kind>-<hash prefix>`.
pub fn default_out_dir(config: &ExperimentConfig) -> PathBuf {
    PathBuf::from("runs").join(format!("{}-{}", config.experiment.kind(), &config.hash()[..12]))
}

/// Validates and executes `config`, writing artifacts to the run directory.
pub fn run(mut config: ExperimentConfig, options: &RunOptions) -> Result<RunManifest, RunError> {
    if let Some(seed) = options.seed {
        config.seed = seed;
    }
    let issues = config.validate();
    if !issues.is_empty() {
        return Err(RunError::Invalid(issues));
    }
    let dir = options.out.clone().or_else(|| config.output_dir.clone()).unwrap_or_else(|| default_out_dir(&config));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .map_err(|e| RunError::Runtime { stage: "setup".into(), source: Error::InvalidParameter(e.to_string()) })?;
    let workers = pool.current_num_threads();
    let hash = config.hash();
    let mut out = RunOutput::new(&dir);
    at("setup", fs::create_dir_all(&dir).map_err(Error::from))?;
    pool.install(|| execute(&config, &mut out))?;
    at("write", out.finish(&hash, config.experiment.kind(), config.seed, workers))
}

fn snapshot(out: &mut RunOutput, enabled: bool, name: &str, lattice: &LatticeBox, values: &[f64], kind: &str, seed: u64) -> Result<(), RunError> {
    if !enabled {
        return Ok(());
    }
    let mut meta = SnapshotMeta::for_box(lattice, kind, values.len());
    meta.seed = Some(seed);
    meta.generator = Some(RngStream::new(seed, 0).algorithm().into());
    at("snapshot", write_snapshot(&out.dir.join(name), values, &meta))?;
    out.snapshots.push(format!("{name}.bin"));
    Ok(())
}

fn build_env(spec: &EnvironmentSpec, stream: RngStream) -> crate::Result<(ConductanceEnvironment, Option<ScalarField>)> {
    match *spec {
        EnvironmentSpec::Homogeneous { dim, side, conductance, kappa } => {
            let lat = LatticeBox::cube(dim, side)?;
            Ok((ConductanceEnvironment::homogeneous(&lat, conductance, kappa, 0.0)?, None))
        }
        EnvironmentSpec::Gff { dim, side, beta, include_killing } => {
            let lat = LatticeBox::cube(dim, side)?;
            let field = sample_gff_dirichlet(&lat, stream)?;
            Ok((build_gff_rcm(&field, beta, include_killing)?, Some(field)))
        }
    }
}

fn point(lat: &LatticeBox, x: &[i64]) -> crate::Result<usize> {
    lat.index_of(x).ok_or_else(|| Error::OutsideBox(x.to_vec()))
}

fn coords_label(c: &[i64]) -> String {
    c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn execute(config: &ExperimentConfig, out: &mut RunOutput) -> Result<(), RunError> {
    let seed = config.seed;
    let root = RngStream::new(seed, 0);
    match &config.experiment {
        Experiment::GffCovariance { dim, side, replicas, pairs } => {
            let lat = at("geometry", LatticeBox::cube(*dim, *side))?;
            let pairs: Vec<(Vec<i64>, Vec<i64>)> = match pairs {
                Some(p) => p.clone(),
                None => {
                    let c = vec![(*side / 2) as i64; *dim];
                    (0..=(*side - 1 - *side / 2) as i64)
                        .map(|r| {
                            let mut y = c.clone();
                            y[0] += r;
                            (c.clone(), y)
                        })
                        .collect()
                }
            };
            let idx: Vec<(usize, usize)> =
                at("geometry", pairs.iter().map(|(x, y)| Ok((point(&lat, x)?, point(&lat, y)?))).collect())?;
            let products = out.stage("sample", || {
                (0..*replicas)
                    .into_par_iter()
                    .map(|r| {
                        let f = sample_gff_dirichlet(&lat, root.child(r as u64))?;
                        Ok(idx.iter().map(|&(x, y)| f.values[x] * f.values[y]).collect::<Vec<_>>())
                    })
                    .collect::<crate::Result<Vec<_>>>()
            });
            let products = at("sample", products)?;
            if config.snapshots {
                let f = at("sample", sample_gff_dirichlet(&lat, root.child(0)))?;
                snapshot(out, true, "field_replica0", &lat, &f.values, "gff-dirichlet", seed)?;
            }
            let mut table = Table::new("covariance", &["x", "y", "empirical", "stderr", "oracle", "z", "pass"]);
            let mut passes = 0;
            for (k, (x, y)) in pairs.iter().enumerate() {
                let col: Vec<f64> = products.iter().map(|p| p[k]).collect();
                let m = crate::analysis::stats::mean(&col);
                let hw = crate::analysis::stats::standard_error(&col);
                let oracle = at("oracle", crate::environments::dirichlet_green(&lat, x, y))?;
                let z = if hw > 0.0 { (m - oracle) / hw } else { 0.0 };
                let pass = z.abs() <= 4.0;
                passes += pass as usize;
                table.push((0, *replicas as u64), vec![coords_label(x).into(), coords_label(y).into(), m.into(), hw.into(), oracle.into(), z.into(), pass.into()]);
            }
            out.summary = json!({ "pairs": pairs.len(), "passed": passes, "all_pass": passes == pairs.len(), "tolerance_standard_errors": 4.0 });
            out.tables.push(table);
        }
        Experiment::FppTimeConstant { model, direction, n_levels, replicas, padding, confidence } => {
            let est = out.stage("distances", || estimate_time_constant(model, direction, n_levels, *replicas, *padding, *confidence, root));
            let est = at("distances", est)?;
            let mut table = Table::new("levels", &["n", "mean", "variance", "ci_low", "ci_high", "half_width", "censored"]);
            for l in &est.levels {
                if l.censored > 0 {
                    out.warn(format!("level n = {} has {} censored replicas", l.n, l.censored));
                }
                table.push(
                    (0, *replicas as u64),
                    vec![l.n.into(), l.mean.into(), l.variance.into(), l.ci_low.into(), l.ci_high.into(), l.half_width.into(), l.censored.into()],
                );
            }
            if !est.subadditive_trend {
                out.warn("level means do not decrease with n; the largest level may be far from the limit");
            }
            out.summary = json!({
                "mu_hat": est.mu_hat,
                "mu_interval": est.mu_interval,
                "subadditive_trend": est.subadditive_trend,
                "padding": est.padding,
                "box_sides": est.box_sides,
                "confidence": est.confidence,
            });
            out.tables.push(table);
        }
        Experiment::Shape { model, dim, t_levels, box_radius, replicas } => {
            let rep = at("shape", out.stage("shape", || shape_convergence(model, *dim, t_levels, *box_radius, *replicas, root)))?;
            if rep.truncated > 0 {
                out.warn(format!("{} replicas reached the box boundary at the largest t", rep.truncated));
            }
            let mut table = Table::new("hausdorff", &["t", "t_next", "mean", "stderr"]);
            for i in 0..rep.hausdorff_mean.len() {
                table.push((0, *replicas as u64), vec![rep.t_levels[i].into(), rep.t_levels[i + 1].into(), rep.hausdorff_mean[i].into(), rep.hausdorff_stderr[i].into()]);
            }
            let mut defects = Table::new("convexity", &["replica", "defect"]);
            for (r, d) in rep.convexity_defect.iter().enumerate() {
                defects.push((r as u64, r as u64 + 1), vec![r.into(), (*d).into()]);
            }
            out.summary = json!({ "hausdorff_mean": rep.hausdorff_mean, "convexity_defect_mean": crate::analysis::stats::mean(&rep.convexity_defect), "truncated": rep.truncated });
            out.tables.push(table);
            out.tables.push(defects);
        }
        Experiment::Crossing { dim, l_grid, h_grid, margin, replicas, confidence } => {
            let curves = at("crossing", out.stage("crossing", || crossing_curve(*dim, l_grid, h_grid, *margin, *replicas, *confidence, root)))?;
            let mut table = Table::new("crossing", &["L", "h", "probability", "ci_low", "ci_high"]);
            let mut stars = Vec::new();
            for c in &curves {
                for (h, p) in c.h_grid.iter().zip(&c.probabilities) {
                    table.push((0, *replicas as u64), vec![c.scale.into(), (*h).into(), p.estimate.into(), p.low.into(), p.high.into()]);
                }
                if c.h_star.is_none() {
                    out.warn(format!("L = {}: crossing probability never drops below {} on the h grid", c.scale, c.threshold));
                }
                stars.push(json!({ "L": c.scale, "h_star": c.h_star, "box_radius": c.box_radius }));
            }
            out.summary = json!({ "threshold": crate::analysis::CRITICAL_THRESHOLD, "confidence": confidence, "h_star": stars });
            out.tables.push(table);
        }
        Experiment::Decoupling { field, dim, side, separations, margin, u, u_hat, f1, f2, replicas, tolerance, confidence, pairing } => {
            let mut table = Table::new(
                "decoupling",
                &["separation", "joint_sprinkled", "mean_f1", "mean_f2", "slack", "half_width", "holds"],
            );
            let mut reports = Vec::new();
            for (i, &sep) in separations.iter().enumerate() {
                let geometry = DecouplingGeometry { dim: *dim, side: *side, separation: sep, margin: *margin };
                let rep = out.stage(&format!("separation-{sep}"), || {
                    decoupling_check(field, &geometry, *u, *u_hat, *f1, *f2, *replicas, *tolerance, *confidence, *pairing, root.child(i as u64))
                });
                let rep = at("decoupling", rep)?;
                table.push(
                    (0, *replicas as u64),
                    vec![sep.into(), rep.joint_sprinkled.into(), rep.mean_f1.into(), rep.mean_f2.into(), rep.slack.into(), rep.slack_half_width.into(), rep.holds.into()],
                );
                reports.push(rep);
            }
            out.summary = json!({ "all_hold": reports.iter().all(|r| r.holds), "reports": reports });
            out.tables.push(table);
        }
        Experiment::GreenDecay { env, h_grid, source, r_min, r_max, min_distance } => {
            let (base, field) = at("environment", out.stage("environment", || build_env(env, root)))?;
            let lat = base.lattice.clone();
            if let Some(f) = &field {
                snapshot(out, config.snapshots, "field", &lat, &f.values, "gff-dirichlet", seed)?;
            }
            let src = source.clone().unwrap_or_else(|| {
                let mut s = vec![(env.side() / 2) as i64; env.dim()];
                s[0] = (env.side() / 4) as i64;
                s
            });
            let y = at("geometry", point(&lat, &src))?;
            let pairs: Vec<(usize, usize)> = at(
                "geometry",
                (*r_min..=*r_max)
                    .map(|r| {
                        let mut x = src.clone();
                        x[0] += r as i64;
                        Ok((point(&lat, &x)?, y))
                    })
                    .collect(),
            )?;
            let report = at("green", out.stage("green", || fit_green_decay(&base, h_grid, &pairs, *min_distance)))?;
            let mut table = Table::new("decay", &["h", "c_hat", "stderr", "ratio_to_sqrt_h", "pairs", "r_low", "r_high"]);
            for f in &report.fits {
                for w in &f.warnings {
                    out.warn(format!("h = {}: {w}", f.h));
                }
                table.push(
                    (0, 1),
                    vec![f.h.into(), f.c_hat.into(), f.stderr.into(), f.ratio_to_sqrt_h.into(), f.pairs.into(), f.distance_span.0.into(), f.distance_span.1.into()],
                );
            }
            let mut power = serde_json::Value::Null;
            if h_grid.contains(&0.0) {
                let samples = at("green", base.with_h(0.0).and_then(|e| green_pairs(&e, &pairs)))?;
                let mut g = Table::new("green_h0", &["r", "g"]);
                for (r, v) in &samples {
                    g.push((0, 1), vec![(*r).into(), (*v).into()]);
                }
                out.tables.push(g);
                if let Ok(fit) = fit_green_power(&samples, *min_distance, *r_max as f64) {
                    power = json!({ "slope": fit.slope, "stderr": fit.slope_stderr, "expected": 2.0 - env.dim() as f64 });
                }
            }
            out.summary = json!({ "ratio_spread": report.ratio_spread, "fits": report.fits, "power_law_h0": power, "source": src });
            out.tables.push(table);
        }
        Experiment::HeatKernel { env, times, source, method, r_max, h } => {
            let (base, field) = at("environment", out.stage("environment", || build_env(env, root)))?;
            let envh = at("environment", base.with_h(*h))?;
            let lat = envh.lattice.clone();
            if let Some(f) = &field {
                snapshot(out, config.snapshots, "field", &lat, &f.values, "gff-dirichlet", seed)?;
            }
            let src = source.clone().unwrap_or_else(|| vec![(env.side() / 2) as i64; env.dim()]);
            let x = at("geometry", point(&lat, &src))?;
            let m = match *method {
                HeatMethodSpec::ExactSmall => HeatMethod::ExactSmall,
                HeatMethodSpec::Krylov { tolerance } => HeatMethod::Krylov { tolerance },
                HeatMethodSpec::MonteCarlo { walks } => HeatMethod::MonteCarlo { walks, stream: root.child(1) },
            };
            let slices = at("heat", out.stage("heat", || heat_kernel_series(&envh, x, times, m)))?;
            let mut table = Table::new("heat", &["t", "on_diagonal", "mass", "error_estimate"]);
            for s in &slices {
                table.push((0, 1), vec![s.t.into(), s.values[x].into(), s.mass(&envh.theta).into(), s.error_estimate.into()]);
            }
            if let Some(last) = slices.last() {
                snapshot(out, config.snapshots, "heat_last", &lat, &last.values, "heat-kernel", seed)?;
            }
            let targets: Vec<usize> = (1..=*r_max)
                .filter_map(|r| {
                    let mut y = src.clone();
                    y[0] += r as i64;
                    lat.index_of(&y)
                })
                .collect();
            let mut summary = json!({ "source": src, "method": m.name() });
            match heat_kernel_shape_fit(&slices, &lat, &targets) {
                Ok(fit) => {
                    let mut g = Table::new("gaussian", &["t", "slope", "stderr", "pairs"]);
                    for f in &fit.gaussian {
                        g.push((0, 1), vec![f.t.into(), f.slope.into(), f.stderr.into(), f.pairs.into()]);
                    }
                    for w in &fit.warnings {
                        out.warn(w.clone());
                    }
                    out.tables.push(g);
                    summary["diagonal_slope"] = json!(fit.diagonal_slope);
                    summary["diagonal_stderr"] = json!(fit.diagonal_stderr);
                    summary["expected_slope"] = json!(-(env.dim() as f64) / 2.0);
                }
                Err(e) => out.warn(format!("no shape fit: {e}")),
            }
            out.summary = summary;
            out.tables.push(table);
        }
        Experiment::InterlacementOccupation { dim, side, ambient_margin, u_grid, replicas } => {
            let target = at("geometry", LatticeBox::cube(*dim, *side))?;
            let margin = ambient_margin.unwrap_or(*side);
            let sampler = at("equilibrium", out.stage("equilibrium", || InterlacementSampler::new(&target, margin)))?;
            let amb = sampler.ambient().clone();
            let nt = target.num_vertices();
            let nu = u_grid.len();
            let block = 256usize;
            let blocks = replicas.div_ceil(block);
            // per level: zero counts, sums and squared sums per target vertex
            let partial = out.stage("sample", || {
                (0..blocks)
                    .into_par_iter()
                    .map(|b| {
                        let mut zeros = vec![0u64; nu * nt];
                        let mut sum = vec![0.0; nu * nt];
                        let mut sq = vec![0.0; nu * nt];
                        for r in b * block..((b + 1) * block).min(*replicas) {
                            let fields = sampler.sample_levels(u_grid, root.child(r as u64))?;
                            for (k, f) in fields.iter().enumerate() {
                                for (v, &l) in f.values.iter().enumerate() {
                                    zeros[k * nt + v] += (l == 0.0) as u64;
                                    sum[k * nt + v] += l;
                                    sq[k * nt + v] += l * l;
                                }
                            }
                        }
                        Ok((zeros, sum, sq))
                    })
                    .collect::<crate::Result<Vec<_>>>()
            });
            let partial = at("sample", partial)?;
            let mut zeros = vec![0u64; nu * nt];
            let mut sum = vec![0.0; nu * nt];
            let mut sq = vec![0.0; nu * nt];
            for (z, s, q) in &partial {
                for i in 0..nu * nt {
                    zeros[i] += z[i];
                    sum[i] += s[i];
                    sq[i] += q[i];
                }
            }
            let amb_index: Vec<usize> = (0..nt).map(|v| amb.index_of(&target.coords(v)).unwrap()).collect();
            let gdiag = at(
                "oracle",
                out.stage("oracle", || amb_index.par_iter().map(|&a| Ok(exp1_green_column(&amb, a)?[a])).collect::<crate::Result<Vec<f64>>>()),
            )?;
            let n = *replicas as f64;
            let mut table = Table::new(
                "occupation",
                &["u", "vertex", "vacancy", "vacancy_stderr", "vacancy_oracle", "vacancy_z", "mean_occupation", "occupation_stderr", "campbell", "occupation_z"],
            );
            let mut per_level = Vec::new();
            for (k, &u) in u_grid.iter().enumerate() {
                let campbell = at("oracle", crate::environments::campbell_mean_occupation(sampler.measure(), &amb, u))?;
                let (mut zv_max, mut zo_max) = (0.0f64, 0.0f64);
                for v in 0..nt {
                    let i = k * nt + v;
                    let p = zeros[i] as f64 / n;
                    let p_se = (p * (1.0 - p) / n).sqrt();
                    let p_or = (-u / gdiag[v]).exp();
                    let m = sum[i] / n;
                    let m_se = (((sq[i] - n * m * m) / (n - 1.0)).max(0.0) / n).sqrt();
                    let c = campbell[amb_index[v]];
                    let zv = if p_se > 0.0 { (p - p_or) / p_se } else { f64::NAN };
                    let zo = if m_se > 0.0 { (m - c) / m_se } else { f64::NAN };
                    zv_max = zv_max.max(zv.abs());
                    zo_max = zo_max.max(zo.abs());
                    table.push(
                        (0, *replicas as u64),
                        vec![u.into(), coords_label(&target.coords(v)).into(), p.into(), p_se.into(), p_or.into(), zv.into(), m.into(), m_se.into(), c.into(), zo.into()],
                    );
                }
                per_level.push(json!({ "u": u, "max_abs_z_vacancy": zv_max, "max_abs_z_occupation": zo_max }));
            }
            out.summary = json!({ "ambient_sides": amb.sides(), "capacity": sampler.capacity(), "levels": per_level });
            out.tables.push(table);
        }
        Experiment::ScheduleDiagnostics { delta, rho, k_switch, l0, k_max, epsilon } => {
            let s = at("schedule", out.stage("schedule", || build_scale_schedule(*delta, *rho, *k_switch, *l0, *k_max)))?;
            let norm = s.normalized_scales();
            let eps = s.epsilons(*epsilon);
            let mut table = Table::new("schedule", &["k", "L_k", "normalized", "a_k", "rho_k", "epsilon_k"]);
            for k in 0..=s.k_max {
                table.push((0, 0), vec![k.into(), s.scales[k].into(), norm[k].into(), s.a[k].into(), s.rhos[k].into(), eps[k].into()]);
            }
            let flags = s.invariant_flags();
            out.summary = json!({ "flags": flags, "all_invariants_hold": flags.all(), "product_bound": s.product_bound });
            out.tables.push(table);
        }
    }
    Ok(())
}
