//! Acceptance run: one `PASS`/`FAIL` line per criterion.
//!
//! Runs without the libtest harness so the report is always printed.
//! Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test --release --test acceptance -- 1 5 10`.
//!
//! Criterion 7 is reported but does not fail the run; see the README.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use fpplab::analysis::crossing_curve;
use fpplab::analysis::stats::{mean, standard_error};
use fpplab::environments::{
    dirichlet_green, exp1_green_column, sample_gff_dirichlet, weights_from_field, campbell_mean_occupation,
    Functional, IidLaw, InterlacementSampler, PassageWeights, WeightMode,
};
use fpplab::fpp::{build_scale_schedule, dijkstra, estimate_time_constant, fpp_distances, WeightModel};
use fpplab::lattice::{l2_distance, LatticeBox};
use fpplab::rcm::{
    build_gff_rcm, fit_green_decay, fit_green_power, green_monte_carlo, green_pairs, heat_kernel_series, solve_green, theta_metric,
    Boundary, ConductanceEnvironment, ExactHeatKernel, HeatMethod,
};
use fpplab::rng::RngStream;
use fpplab::runner::{run, ExperimentConfig, RunOptions};

type Outcome = Result<(bool, String), String>;

/// Criteria reported but not required for a green run.
const KNOWN_RED: &[u32] = &[7];

// ── 1: GFF covariance ──

fn criterion_1() -> Outcome {
    let lat = LatticeBox::cube(3, 9).map_err(|e| e.to_string())?;
    let replicas = 10_000u64;
    let mut rng = RngStream::new(101, 999).generator();
    let pairs: Vec<(Vec<i64>, Vec<i64>)> = (0..20)
        .map(|_| {
            let p = |r: &mut rand_chacha::ChaCha8Rng| (0..3).map(|_| r.gen_range(0..9)).collect::<Vec<i64>>();
            (p(&mut rng), p(&mut rng))
        })
        .collect();
    let idx: Vec<(usize, usize)> = pairs.iter().map(|(x, y)| (lat.index_of(x).unwrap(), lat.index_of(y).unwrap())).collect();
    let products: Vec<Vec<f64>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let f = sample_gff_dirichlet(&lat, RngStream::new(101, r)).unwrap();
            idx.iter().map(|&(a, b)| f.values[a] * f.values[b]).collect()
        })
        .collect();
    let mut worst = 0.0f64;
    for (k, (x, y)) in pairs.iter().enumerate() {
        let col: Vec<f64> = products.iter().map(|p| p[k]).collect();
        let z = (mean(&col) - dirichlet_green(&lat, x, y).unwrap()) / standard_error(&col);
        worst = worst.max(z.abs());
    }
    let mut single = 0.0f64;
    for d in 1..=3 {
        let one = LatticeBox::cube(d, 1).unwrap();
        single = single.max((dirichlet_green(&one, &vec![0; d], &vec![0; d]).unwrap() - 1.0 / (2.0 * d as f64)).abs());
    }
    Ok((worst <= 4.0 && single <= 1e-12, format!("max |z| over 20 pairs = {worst:.2} (≤ 4); single-site variance error {single:.1e} (≤ 1e-12)")))
}

// ── 2: exact distances against simple-path enumeration ──

/// Minimum over simple paths from `s` by depth-first enumeration. Branches
/// whose running cost already exceeds the best cost found for the current
/// vertex are cut; with non-negative weights this never loses a minimum.
fn brute_force(w: &PassageWeights, s: usize) -> Vec<f64> {
    let lat = &w.lattice;
    let n = lat.num_vertices();
    let mut best = vec![f64::INFINITY; n];
    let mut on_path = vec![false; n];
    fn go(w: &PassageWeights, v: usize, cost: f64, best: &mut [f64], on_path: &mut [bool]) {
        if cost > best[v] || cost.is_infinite() {
            return;
        }
        best[v] = cost;
        on_path[v] = true;
        for (u, e) in w.lattice.neighbors(v).into_iter().map(|u| (u, w.lattice.edge_between(v, u).unwrap())) {
            if on_path[u] {
                continue;
            }
            let step = match w.mode {
                WeightMode::Edge => w.values[e],
                WeightMode::Vertex => w.values[u],
            };
            go(w, u, cost + step, best, on_path);
        }
        on_path[v] = false;
    }
    let start = match w.mode {
        WeightMode::Edge => 0.0,
        WeightMode::Vertex => w.values[s],
    };
    go(w, s, start, &mut best, &mut on_path);
    best
}

fn criterion_2() -> Outcome {
    let mut shapes = Vec::new();
    for d in 1..=3usize {
        for code in 0..3usize.pow(d as u32) {
            let sides: Vec<usize> = (0..d).map(|a| code / 3usize.pow(a as u32) % 3 + 1).collect();
            shapes.push(sides);
        }
    }
    let mut rng = RngStream::new(202, 0).generator();
    let (mut mismatches, mut compared) = (0usize, 0usize);
    for table in 0..200u64 {
        let sides = &shapes[table as usize % shapes.len()];
        let lat = LatticeBox::new(sides, &vec![0; sides.len()]).unwrap();
        let mode = if table % 2 == 0 { WeightMode::Edge } else { WeightMode::Vertex };
        let len = match mode {
            WeightMode::Edge => lat.num_edges(),
            WeightMode::Vertex => lat.num_vertices(),
        };
        let values: Vec<f64> = (0..len)
            .map(|_| match rng.gen_range(0..10) {
                0 => 0.0,
                1 => f64::INFINITY,
                2 => rng.gen_range(0..4) as f64,
                _ => rng.gen::<f64>() * 3.0,
            })
            .collect();
        let w = PassageWeights::new(lat.clone(), mode, values).unwrap();
        for s in 0..lat.num_vertices() {
            let fast = fpp_distances(&w, &[s]).unwrap().distances;
            let slow = brute_force(&w, s);
            for (a, b) in fast.iter().zip(&slow) {
                compared += 1;
                let same = (a.is_infinite() && b.is_infinite()) || (a - b).abs() <= 1e-12 * b.abs().max(1.0);
                mismatches += !same as usize;
            }
        }
    }
    Ok((mismatches == 0, format!("{mismatches} mismatches over {compared} distances from 200 tables on {} box shapes", shapes.len())))
}

// ── 3: i.i.d. zero-weight criterion ──

fn criterion_3() -> Outcome {
    let est = |p: f64| {
        let model = WeightModel::Iid { law: IidLaw::BernoulliZero { p }, mode: WeightMode::Edge };
        estimate_time_constant(&model, &[1, 0], &[32, 64, 128], 200, None, 0.95, RngStream::new(303, (p * 10.0) as u64))
            .map_err(|e| e.to_string())
    };
    let sub = est(0.1)?;
    let sup = est(0.9)?;
    let a = sub.levels.last().unwrap();
    let b = sup.levels.last().unwrap();
    let ok = a.mean >= 0.2 && a.ci_low > 0.0 && b.mean <= 0.02;
    Ok((
        ok,
        format!(
            "p=0.1: mu_hat(128) = {:.4}, 95% CI [{:.4}, {:.4}] (box {:?}); p=0.9: mean d/n = {:.4} (≤ 0.02)",
            a.mean, a.ci_low, a.ci_high, sub.box_sides, b.mean
        ),
    ))
}

// ── 4: GFF level-set FPP ──

fn criterion_4() -> Outcome {
    // finite-size critical level from crossings Q_64 → Q_128^c
    let h_grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.05).collect();
    let curve = crossing_curve(3, &[64], &h_grid, 16, 40, 0.95, RngStream::new(404, 1)).map_err(|e| e.to_string())?;
    let h_star = curve[0].h_star.ok_or("crossing probability never below 0.05 on the grid")?;

    let lat = LatticeBox::new(&[128, 128, 128], &[-24, -64, -64]).map_err(|e| e.to_string())?;
    let s = lat.index_of(&[0, 0, 0]).unwrap();
    let t = lat.index_of(&[80, 0, 0]).unwrap();
    let levels = [h_star - 0.5, h_star - 0.25, h_star, h_star + 0.25, h_star + 0.5];
    let replicas = 24u64;
    let per_replica: Vec<Vec<f64>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let field = sample_gff_dirichlet(&lat, RngStream::new(404, 100 + r)).unwrap();
            levels
                .iter()
                .map(|&h| {
                    let w = weights_from_field(&field, &Functional::IndicatorBelow { h }, 0.0, WeightMode::Vertex).unwrap();
                    dijkstra(&w, &[s], Some(&[t])).unwrap()[t] / 80.0
                })
                .collect()
        })
        .collect();
    let monotone_failures = per_replica.iter().map(|d| d.windows(2).filter(|w| w[1] < w[0]).count()).sum::<usize>();
    let col = |k: usize| per_replica.iter().map(|d| d[k]).collect::<Vec<f64>>();
    let (low, high) = (col(0), col(levels.len() - 1));
    let hw_high = 1.959963984540054 * standard_error(&high);
    let ok = monotone_failures == 0 && mean(&high) > hw_high && mean(&low) <= 0.02;
    Ok((
        ok,
        format!(
            "ĥ_*(64) = {h_star:.2}; pointwise order failures {monotone_failures}; mu(ĥ+0.5) = {:.4} vs half-width {hw_high:.4}; mu(ĥ−0.5) = {:.4} (≤ 0.02)",
            mean(&high),
            mean(&low)
        ),
    ))
}

// ── 5: Green-kernel oracles ──

fn criterion_5() -> Outcome {
    let lat = LatticeBox::cube(3, 5).unwrap();
    let field = sample_gff_dirichlet(&lat, RngStream::new(505, 0)).unwrap();
    let envs = [
        ("homogeneous h=0.3", ConductanceEnvironment::homogeneous(&lat, 1.0, 1.0, 0.3).unwrap()),
        ("gff beta=0.25 h=0.5", build_gff_rcm(&field, 0.25, true).unwrap().with_h(0.5).unwrap()),
        ("gff beta=0.25 h=0", build_gff_rcm(&field, 0.25, true).unwrap()),
    ];
    let x = lat.index_of(&[2, 2, 1]).unwrap();
    let (mut worst_z, mut worst_rel) = (0.0f64, 0.0f64);
    for (k, (_, env)) in envs.iter().enumerate() {
        let g = solve_green(env, x, Boundary::Absorbing).map_err(|e| e.to_string())?;
        let mc = green_monte_carlo(env, x, 100_000, RngStream::new(505, 10 + k as u64)).map_err(|e| e.to_string())?;
        for y in 0..lat.num_vertices() {
            if mc.stderr[y] > 0.0 {
                worst_z = worst_z.max(((mc.mean[y] - g.values[y]) / mc.stderr[y]).abs());
            }
        }
        let (integral, _) = ExactHeatKernel::new(env).and_then(|h| h.time_integral(x, 1e-10)).map_err(|e| e.to_string())?;
        for y in 0..lat.num_vertices() {
            worst_rel = worst_rel.max(((integral[y] - g.values[y]) / g.values[y]).abs());
        }
    }
    Ok((
        worst_z <= 4.0 && worst_rel <= 1e-6,
        format!("Monte Carlo max |z| = {worst_z:.2} (≤ 4) over 3 envs × 125 sites; quadrature max relative error {worst_rel:.1e} (≤ 1e-6)"),
    ))
}

// ── 6: √h decay ──

fn decay_setup(lat: &LatticeBox) -> Vec<(usize, usize)> {
    let y = lat.index_of(&[12, 24, 24]).unwrap();
    (8..=24).map(|r| (lat.index_of(&[12 + r, 24, 24]).unwrap(), y)).collect()
}

fn criterion_6() -> Outcome {
    let lat = LatticeBox::cube(3, 48).unwrap();
    let pairs = decay_setup(&lat);
    let hom = ConductanceEnvironment::homogeneous(&lat, 1.0, 1.0, 0.0).unwrap();
    let field = sample_gff_dirichlet(&lat, RngStream::new(606, 0)).unwrap();
    let gff = build_gff_rcm(&field, 0.25, true).unwrap();
    let grid = [0.04, 0.16, 0.64];
    let a = fit_green_decay(&hom, &grid, &pairs, 8.0).map_err(|e| e.to_string())?;
    let b = fit_green_decay(&gff, &grid, &pairs, 8.0).map_err(|e| e.to_string())?;
    let rates = |r: &fpplab::rcm::DecayReport| r.fits.iter().map(|f| format!("{:.3}", f.c_hat)).collect::<Vec<_>>().join("/");
    Ok((
        a.ratio_spread <= 1.3 && b.ratio_spread <= 1.6,
        format!(
            "homogeneous max/min ĉ/√h = {:.3} (≤ 1.3, ĉ = {}); GFF = {:.3} (≤ 1.6, ĉ = {})",
            a.ratio_spread,
            rates(&a),
            b.ratio_spread,
            rates(&b)
        ),
    ))
}

// ── 7: polynomial prefactor at h = 0 ──

fn criterion_7() -> Outcome {
    let lat = LatticeBox::cube(3, 48).unwrap();
    let env = ConductanceEnvironment::homogeneous(&lat, 1.0, 1.0, 0.0).unwrap();
    let pairs = decay_setup(&lat);
    let samples = green_pairs(&env, &pairs).map_err(|e| e.to_string())?;
    let fit = fit_green_power(&samples, 8.0, 20.0).map_err(|e| e.to_string())?;
    Ok(((fit.slope + 1.0).abs() <= 0.15, format!("slope of log g vs log r over [8, 20] = {:.3} (target −1.0 ± 0.15)", fit.slope)))
}

// ── 8: heat-kernel exponent ──

fn criterion_8() -> Outcome {
    let lat = LatticeBox::cube(3, 48).unwrap();
    let field = sample_gff_dirichlet(&lat, RngStream::new(808, 0)).unwrap();
    let env = build_gff_rcm(&field, 0.25, false).unwrap();
    let x = lat.index_of(&[24, 24, 24]).unwrap();
    let times = [8.0, 16.0, 32.0, 64.0];
    let slices = heat_kernel_series(&env, x, &times, HeatMethod::Krylov { tolerance: 1e-8 }).map_err(|e| e.to_string())?;
    let targets: Vec<usize> = (1..=8).map(|r| lat.index_of(&[24 + r, 24, 24]).unwrap()).collect();
    let fit = fpplab::analysis::heat_kernel_shape_fit(&slices, &lat, &targets).map_err(|e| e.to_string())?;
    Ok((
        fit.diagonal_error() <= 0.25,
        format!("on-diagonal slope over t ∈ [8, 64] = {:.3} (−1.5 ± 0.25)", fit.diagonal_slope),
    ))
}

// ── 9: interlacement oracles ──

fn criterion_9() -> Outcome {
    let target = LatticeBox::cube(3, 5).unwrap();
    let sampler = InterlacementSampler::new(&target, 5).map_err(|e| e.to_string())?;
    let amb = sampler.ambient().clone();
    let levels = [0.5, 1.0, 2.0];
    let n = 10_000usize;
    let nt = target.num_vertices();
    let fields: Vec<Vec<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|r| sampler.sample_levels(&levels, RngStream::new(909, r as u64)).unwrap().into_iter().map(|f| f.values).collect())
        .collect();
    let amb_idx: Vec<usize> = (0..nt).map(|v| amb.index_of(&target.coords(v)).unwrap()).collect();
    let gdiag: Vec<f64> = amb_idx.iter().map(|&a| exp1_green_column(&amb, a).unwrap()[a]).collect();
    let (mut zv, mut zo) = (0.0f64, 0.0f64);
    for (k, &u) in levels.iter().enumerate() {
        let campbell = campbell_mean_occupation(sampler.measure(), &amb, u).unwrap();
        for v in 0..nt {
            let occ: Vec<f64> = fields.iter().map(|f| f[k][v]).collect();
            let vac: Vec<f64> = occ.iter().map(|&l| (l == 0.0) as u8 as f64).collect();
            let p = (-u / gdiag[v]).exp();
            zv = zv.max(((mean(&vac) - p) / (p * (1.0 - p) / n as f64).sqrt()).abs());
            zo = zo.max(((mean(&occ) - campbell[amb_idx[v]]) / standard_error(&occ)).abs());
        }
    }
    Ok((
        zv <= 4.0 && zo <= 4.0,
        format!("max |z| vacancy = {zv:.2}, occupation = {zo:.2} (≤ 4) over 125 sites × 3 levels, 10⁴ replicas"),
    ))
}

// ── 10: schedule invariants ──

/// `Σ_{n ≥ 0} (n + q)^{−s}`: direct compensated sum of the first terms plus
/// an Euler–Maclaurin tail at a far cut.
fn zeta_reference(s: f64, q: f64) -> f64 {
    let cut = 20_000usize;
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for n in (0..cut).rev() {
        let y = (n as f64 + q).powf(-s) - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    let a = cut as f64 + q;
    let tail = a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s) + s * a.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * a.powf(-s - 3.0) / 720.0;
    sum + tail
}

fn criterion_10() -> Outcome {
    let mut rng = RngStream::new(1010, 0).generator();
    let (mut flag_failures, mut worst_a, mut worst_eps) = (0usize, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let delta = 1.0 + rng.gen_range(1e-3..=3.0);
        let rho = rng.gen_range(0.05..3.0);
        let k_switch = rng.gen_range(0..=40);
        let l0 = rng.gen_range(1.0..1000.0);
        let s = build_scale_schedule(delta, rho, k_switch, l0, 40).map_err(|e| e.to_string())?;
        flag_failures += !s.invariant_flags().all() as usize;
        let eps = s.epsilons(1.0);
        let mut log_a = 0.0f64;
        let mut tail = zeta_reference(delta, 46.0);
        for k in (0..=40).rev() {
            worst_eps = worst_eps.max((eps[k] - tail).abs() / tail);
            tail += ((k + 5) as f64).powf(-delta);
        }
        for k in 0..=40 {
            worst_a = worst_a.max((s.a[k] / log_a.exp() - 1.0).abs());
            log_a += std::f64::consts::LN_2 + (-((k + 6) as f64).powf(-delta)).ln_1p();
        }
    }
    Ok((
        flag_failures == 0 && worst_a <= 1e-12 && worst_eps <= 1e-12,
        format!("invariant failures {flag_failures}/100; max relative error a_k {worst_a:.1e}, ε_k {worst_eps:.1e} (≤ 1e-12)"),
    ))
}

// ── 11: metric comparability ──

fn criterion_11() -> Outcome {
    let lat = LatticeBox::cube(3, 32).unwrap();
    let mins: Vec<f64> = (0..10u64)
        .into_par_iter()
        .map(|f| {
            let field = sample_gff_dirichlet(&lat, RngStream::new(1111, f)).unwrap();
            let env = build_gff_rcm(&field, 0.25, false).unwrap();
            let mut rng = RngStream::new(1111, 100 + f).generator();
            let mut best = f64::INFINITY;
            for _ in 0..6 {
                let x = rng.gen_range(0..lat.num_vertices());
                let d = theta_metric(&env, &[x]).unwrap();
                let xc = lat.coords(x);
                for y in 0..lat.num_vertices() {
                    let r = l2_distance(&xc, &lat.coords(y));
                    if r >= 16.0 {
                        best = best.min(d.get(y) / r);
                    }
                }
            }
            best
        })
        .collect();
    let lo = mins.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = mins.iter().copied().fold(0.0, f64::max);
    let variation = (hi - lo) / lo;
    Ok((lo > 0.0 && variation <= 0.25, format!("min d_θ/|x−y| per field in [{lo:.4}, {hi:.4}], (max−min)/min = {variation:.3} (≤ 0.25)")))
}

// ── 12: determinism ──

fn criterion_12() -> Outcome {
    let configs = [
        r#"{"seed": 12, "experiment": {"kind": "gff-covariance", "dim": 3, "side": 7, "replicas": 500}}"#,
        r#"{"seed": 12, "experiment": {"kind": "fpp-time-constant", "model": {"model": "iid", "law": {"law": "exponential", "rate": 1.0}, "mode": "edge"}, "direction": [1, 0], "n_levels": [8, 16], "replicas": 40}}"#,
        r#"{"seed": 12, "experiment": {"kind": "interlacement-occupation", "dim": 3, "side": 3, "u_grid": [0.5, 1.0], "replicas": 600}}"#,
        r#"{"seed": 12, "experiment": {"kind": "green-decay", "env": {"environment": "gff", "dim": 3, "side": 20, "beta": 0.25}, "h_grid": [0.0, 0.16, 0.64], "r_min": 4, "r_max": 12, "min_distance": 4}}"#,
        r#"{"seed": 12, "experiment": {"kind": "crossing", "dim": 3, "l_grid": [2, 3], "h_grid": [0.0, 0.3, 0.6], "margin": 2, "replicas": 30}}"#,
    ];
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut differing = Vec::new();
    for (i, text) in configs.iter().enumerate() {
        let mut bodies = Vec::new();
        for (j, workers) in [1usize, 3, 1].iter().enumerate() {
            let cfg = ExperimentConfig::from_json(text).map_err(|e| e.to_string())?;
            let dir = root.path().join(format!("{i}-{j}"));
            let m = run(cfg, &RunOptions { out: Some(dir.clone()), workers: *workers, seed: None }).map_err(|e| e.to_string())?;
            let mut all = String::new();
            for t in &m.tables {
                all += &std::fs::read_to_string(dir.join(t)).map_err(|e| e.to_string())?;
            }
            bodies.push(all);
        }
        if bodies.windows(2).any(|w| w[0] != w[1]) {
            differing.push(i);
        }
    }
    Ok((differing.is_empty(), format!("{} configs × 3 runs (1, 3, 1 workers); configs with differing CSV bytes: {differing:?}", configs.len())))
}

fn main() {
    let wanted: BTreeSet<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: Vec<(u32, &str, fn() -> Outcome)> = vec![
        (1, "GFF covariance oracle", criterion_1),
        (2, "FPP exactness vs simple-path enumeration", criterion_2),
        (3, "i.i.d. zero-weight criterion", criterion_3),
        (4, "GFF level-set FPP", criterion_4),
        (5, "Green-kernel oracles", criterion_5),
        (6, "sqrt(h) Green decay", criterion_6),
        (7, "polynomial prefactor at h = 0", criterion_7),
        (8, "heat-kernel on-diagonal exponent", criterion_8),
        (9, "interlacement vacancy and occupation", criterion_9),
        (10, "scale schedule invariants", criterion_10),
        (11, "metric comparability", criterion_11),
        (12, "determinism", criterion_12),
    ];
    let mut required_failures = Vec::new();
    for (id, name, f) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let clock = Instant::now();
        let (pass, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = clock.elapsed().as_secs_f64();
        let tag = if pass { "PASS" } else { "FAIL" };
        let note = if !pass && KNOWN_RED.contains(&id) { " [known red, not required]" } else { "" };
        println!("{tag} criterion {id:>2} ({name}): {detail} [{secs:.1}s]{note}");
        if !pass && !KNOWN_RED.contains(&id) {
            required_failures.push(id);
        }
    }
    if !required_failures.is_empty() {
        eprintln!("required criteria failed: {required_failures:?}");
        std::process::exit(1);
    }
}
