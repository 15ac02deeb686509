mod common;

use common::oracles::oracle_hc;
use incgraph::metrics::{homogeneity_completeness, v_measure_from};
use incgraph::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn entropy_oracle_agreement_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let n = rng.random_range(1..200);
        let (kt, kp) = (rng.random_range(1..8), rng.random_range(1..8));
        let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..kt)).collect();
        let pred: Vec<usize> = (0..n).map(|_| rng.random_range(0..kp)).collect();
        let (h, c) = homogeneity_completeness(&truth, &pred).unwrap();
        let (oh, oc) = oracle_hc(&truth, &pred);
        assert!((h - oh).abs() <= 1e-12 && (c - oc).abs() <= 1e-12, "{h} {oh} {c} {oc}");
    }
}

#[test]
fn two_by_two_table() {
    let (h, c) = homogeneity_completeness(&[0, 0, 1, 1], &[0, 1, 1, 0]).unwrap();
    let (oh, oc) = oracle_hc(&[0, 0, 1, 1], &[0, 1, 1, 0]);
    assert!((h - oh).abs() < 1e-15 && (c - oc).abs() < 1e-15);
    assert!(h.abs() < 1e-15 && c.abs() < 1e-15);
}

#[test]
fn degenerate_clusterings() {
    let truth = [0, 0, 1, 1, 2, 2];
    let one = scores(&truth, &[7; 6], 1.0).unwrap();
    assert_eq!((one.homogeneity, one.completeness, one.v_measure), (0.0, 1.0, 0.0));
    let single_class = homogeneity_completeness(&[3; 6], &[0, 1, 2, 3, 4, 5]).unwrap();
    assert_eq!(single_class, (1.0, 0.0));
    let perfect = scores(&truth, &[5, 5, 9, 9, 1, 1], 1.0).unwrap();
    assert_eq!(perfect.v_measure, 1.0);
    assert!((v_measure_from(0.5, 1.0, 1.0) - 2.0 / 3.0).abs() < 1e-15);
    assert!(matches!(v_measure(&[0, 1], &[0], 1.0), Err(Error::Parameter(_))));
    assert!(v_measure(&[0, 1], &[0, 1], -1.0).is_err());
}

proptest! {
    #[test]
    fn scores_stay_in_unit_interval(pairs in proptest::collection::vec((0usize..6, 0usize..6), 1..120), beta in 0.0f64..5.0) {
        let (truth, pred): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let s = scores(&truth, &pred, beta).unwrap();
        for v in [s.homogeneity, s.completeness, s.v_measure] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn v1_is_symmetric_and_relabel_invariant(pairs in proptest::collection::vec((0usize..5, 0usize..5), 1..80), shift in 1usize..10) {
        let (truth, pred): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let v = v_measure(&truth, &pred, 1.0).unwrap();
        prop_assert!((v - v_measure(&pred, &truth, 1.0).unwrap()).abs() < 1e-12);
        let relabeled: Vec<usize> = pred.iter().map(|p| (p + shift) * 3).collect();
        prop_assert!((v - v_measure(&truth, &relabeled, 1.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn larger_beta_moves_toward_completeness(h in 0.01f64..1.0, c in 0.01f64..1.0) {
        prop_assume!((h - c).abs() > 1e-6);
        let vs: Vec<f64> = [0.5, 1.0, 2.0].iter().map(|&b| v_measure_from(h, c, b)).collect();
        let dist: Vec<f64> = vs.iter().map(|v| (v - c).abs()).collect();
        prop_assert!(dist[0] > dist[1] && dist[1] > dist[2]);
    }
}
