//! Coverage of reported intervals on environments with known answers.

use fpplab::analysis::{bernoulli_interval, confidence_interval, decoupling_check, wilson_interval, BoxFunctional, DecouplingGeometry, FieldModel, Pairing};
use fpplab::environments::{IidLaw, WeightMode};
use fpplab::fpp::{estimate_time_constant, WeightModel};
use fpplab::rng::{exponential, RngStream};
use rand::Rng;

#[test]
fn wilson_intervals_cover_bernoulli_mean() {
    let p = 0.3;
    let runs = 400;
    let covered = (0..runs)
        .filter(|&r| {
            let mut rng = RngStream::new(41, r).generator();
            let k = (0..100).filter(|_| rng.gen::<f64>() < p).count() as u64;
            wilson_interval(k, 100, 0.95).unwrap().contains(p)
        })
        .count();
    assert!(covered as f64 / runs as f64 >= 0.9, "{covered}/{runs}");
}

#[test]
fn bernoulli_samples_use_wilson() {
    let xs: Vec<f64> = (0..100).map(|i| (i % 2) as f64).collect();
    let i = bernoulli_interval(&xs, 0.95).unwrap();
    assert!((i.low - 0.4038).abs() < 1e-3 && (i.high - 0.5962).abs() < 1e-3);
}

#[test]
fn normal_intervals_cover_exponential_mean() {
    let runs = 400;
    let covered = (0..runs)
        .filter(|&r| {
            let mut rng = RngStream::new(42, r).generator();
            let xs: Vec<f64> = (0..60).map(|_| exponential(&mut rng, 2.0)).collect();
            let (m, hw) = confidence_interval(&xs, 0.95).unwrap();
            (m - 0.5).abs() <= hw
        })
        .count();
    assert!(covered as f64 / runs as f64 >= 0.9, "{covered}/{runs}");
}

#[test]
fn time_constant_interval_covers_one_dimensional_truth() {
    // on a line, d(0, n)/n is the mean of n i.i.d. weights, so mu = E t exactly
    let model = WeightModel::Iid { law: IidLaw::Exponential { rate: 0.5 }, mode: WeightMode::Edge };
    let runs = 100;
    let covered = (0..runs)
        .filter(|&r| {
            let est = estimate_time_constant(&model, &[1], &[8, 16], 30, None, 0.95, RngStream::new(43, r)).unwrap();
            est.mu_interval.contains(2.0)
        })
        .count();
    assert!(covered >= 90, "{covered}/{runs}");
}

#[test]
fn constant_weights_give_exact_time_constant() {
    let model = WeightModel::Iid { law: IidLaw::Constant { c: 1.5 }, mode: WeightMode::Edge };
    let est = estimate_time_constant(&model, &[1, 1], &[4, 8], 5, None, 0.95, RngStream::new(44, 0)).unwrap();
    assert!((est.mu_hat - 3.0).abs() < 1e-12);
    assert!(est.mu_interval.contains(3.0));
}

#[test]
fn common_random_numbers_do_not_widen_intervals() {
    let g = DecouplingGeometry { dim: 3, side: 3, separation: 2, margin: 2 };
    let f = BoxFunctional::FractionAbove { h: 0.0 };
    let run = |pairing| decoupling_check(&FieldModel::Gff, &g, 0.1, 0.0, f, f, 400, 0.0, 0.95, pairing, RngStream::new(45, 0)).unwrap();
    let common = run(Pairing::Common);
    let independent = run(Pairing::Independent);
    assert!(common.slack_half_width <= independent.slack_half_width, "{} vs {}", common.slack_half_width, independent.slack_half_width);
}
