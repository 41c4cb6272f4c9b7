use fpplab::environments::{PassageWeights, WeightMode};
use fpplab::fpp::{dijkstra, normalized_hausdorff};
use fpplab::lattice::LatticeBox;
use proptest::prelude::*;

fn weights() -> impl Strategy<Value = PassageWeights> {
    (1usize..=3, 2usize..=5).prop_flat_map(|(d, side)| {
        let lat = LatticeBox::cube(d, side).unwrap();
        let m = lat.num_edges();
        prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..4.0, Just(f64::INFINITY)], m)
            .prop_map(move |v| PassageWeights::new(lat.clone(), WeightMode::Edge, v).unwrap())
    })
}

fn brute_hausdorff(lat: &LatticeBox, a: &[usize], ta: f64, b: &[usize], tb: f64) -> f64 {
    let directed = |a: &[usize], ta: f64, b: &[usize], tb: f64| {
        a.iter()
            .map(|&x| {
                let xc = lat.coords(x);
                b.iter()
                    .map(|&y| {
                        let yc = lat.coords(y);
                        xc.iter().zip(&yc).map(|(&p, &q)| (p as f64 / ta - q as f64 / tb).powi(2)).sum::<f64>().sqrt()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    directed(a, ta, b, tb).max(directed(b, tb, a, ta))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edge_distances_are_a_metric(w in weights(), a in 0usize..1000, b in 0usize..1000, c in 0usize..1000) {
        let n = w.lattice.num_vertices();
        let (a, b, c) = (a % n, b % n, c % n);
        let da = dijkstra(&w, &[a], None).unwrap();
        let db = dijkstra(&w, &[b], None).unwrap();
        prop_assert_eq!(da[a], 0.0);
        prop_assert!(da[b] == db[a] || (da[b] - db[a]).abs() < 1e-9);
        if da[b].is_finite() && db[c].is_finite() {
            prop_assert!(da[c] <= da[b] + db[c] + 1e-9);
        }
    }

    #[test]
    fn multi_source_is_pointwise_minimum(w in weights(), a in 0usize..1000, b in 0usize..1000) {
        let n = w.lattice.num_vertices();
        let (a, b) = (a % n, b % n);
        let both = dijkstra(&w, &[a, b], None).unwrap();
        let da = dijkstra(&w, &[a], None).unwrap();
        let db = dijkstra(&w, &[b], None).unwrap();
        for v in 0..n {
            prop_assert_eq!(both[v], da[v].min(db[v]));
        }
    }

    #[test]
    fn scaling_weights_scales_distances(w in weights(), s in 0usize..1000, k in 0.5f64..4.0) {
        let n = w.lattice.num_vertices();
        let s = s % n;
        let d = dijkstra(&w, &[s], None).unwrap();
        let dk = dijkstra(&w.scaled(k), &[s], None).unwrap();
        for v in 0..n {
            prop_assert!(d[v] * k == dk[v] || (d[v] * k - dk[v]).abs() < 1e-9 * dk[v].max(1.0));
        }
    }

    #[test]
    fn hausdorff_is_symmetric(xs in prop::collection::vec(0usize..121, 1..20), ys in prop::collection::vec(0usize..121, 1..20), t in 1.0f64..5.0) {
        let lat = LatticeBox::centered(&[0, 0], 5).unwrap();
        let a = normalized_hausdorff(&lat, &xs, t, &ys, 2.0 * t).unwrap();
        let b = normalized_hausdorff(&lat, &ys, 2.0 * t, &xs, t).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((a - brute_hausdorff(&lat, &xs, t, &ys, 2.0 * t)).abs() < 1e-12);
    }
}
