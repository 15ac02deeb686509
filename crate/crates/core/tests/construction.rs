mod common;

use common::oracles::{incremental_oracle, knn_oracle, kruskal_weight};
use common::{dfs_components, pairwise, random_dataset};
use incgraph::construction::DEFAULT_EPSILON_TOL;
use incgraph::graph::component_labels;
use incgraph::*;
use proptest::prelude::*;

fn triples(g: &NeighborGraph) -> Vec<(usize, usize, f64)> {
    g.edges().iter().map(|e| (e.src, e.dst, e.distance)).collect()
}

#[test]
fn hand_built_line() {
    let data = VectorDataset::from_rows(&[vec![0.0], vec![1.0], vec![3.0], vec![7.0]]).unwrap();
    let g = build_knn_standard(&data, 1, Metric::Euclidean).unwrap();
    let pairs: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.src, e.dst)).collect();
    assert_eq!(pairs, vec![(0, 1), (1, 0), (2, 1), (3, 2)]);
    let r = connected_components(&g);
    assert_eq!((r.num_components, r.graph_edges, r.digraph_edges), (1, 4, 6));

    let inc = build_knn_incremental(&data, 1, Metric::Euclidean, &NodeOrdering::from_permutation(vec![3, 0, 2, 1], 0).unwrap()).unwrap();
    let pairs: Vec<(usize, usize)> = inc.edges().iter().map(|e| (e.src, e.dst)).collect();
    assert_eq!(pairs, vec![(0, 3), (1, 0), (2, 0)]);
}

#[test]
fn epsilon_threshold_is_inclusive() {
    let data = VectorDataset::from_rows(&[vec![0.0], vec![1.0], vec![3.0]]).unwrap();
    let g = build_epsilon(&data, 1.0, Metric::Euclidean).unwrap();
    assert_eq!(g.num_edges(), 2);
    assert_eq!(connected_components(&g).num_components, 2);
    assert_eq!(connected_components(&g).graph_edges, 1);
    let eps0 = find_epsilon0(&data, Metric::Euclidean, DEFAULT_EPSILON_TOL).unwrap();
    assert!((eps0 - 2.0).abs() <= 1e-6 && eps0 >= 2.0);
}

#[test]
fn k_out_of_range_is_rejected() {
    let data = random_dataset(5, 2, 0);
    assert!(matches!(build_knn_standard(&data, 0, Metric::Euclidean), Err(Error::Parameter(_))));
    assert!(matches!(build_knn_standard(&data, 5, Metric::Euclidean), Err(Error::Parameter(_))));
    assert!(build_knn_incremental(&data, 5, Metric::Euclidean, &NodeOrdering::identity(5)).is_err());
}

#[test]
fn zero_vector_under_cosine_is_a_domain_error() {
    let data = VectorDataset::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    assert!(matches!(build_knn_standard(&data, 1, Metric::Cosine), Err(Error::Domain(_))));
}

#[test]
fn table_invariants_on_random_data() {
    for seed in 0..5 {
        let data = random_dataset(80, 6, seed);
        let mut prev = usize::MAX;
        for k in 1..=6 {
            let r = connected_components(&build_knn_standard(&data, k, Metric::Cosine).unwrap());
            assert!(r.num_components <= prev, "components must not grow with k");
            assert_eq!(r.graph_edges, k * 80);
            assert!(r.digraph_edges >= r.graph_edges && r.digraph_edges <= 2 * r.graph_edges);
            prev = r.num_components;
        }
    }
}

#[test]
fn epsilon_zero_is_the_connectivity_threshold() {
    for seed in 0..10 {
        let data = random_dataset(40, 3, 100 + seed);
        let eps0 = find_epsilon0(&data, Metric::Euclidean, 1e-9).unwrap();
        assert!(connected_components(&build_epsilon(&data, eps0, Metric::Euclidean).unwrap()).is_connected());
        assert!(!connected_components(&build_epsilon(&data, eps0 - 1e-6, Metric::Euclidean).unwrap()).is_connected());
        // The threshold equals the largest MST edge.
        let d = pairwise(&data, Metric::Euclidean);
        let mst = minimum_spanning_tree(&data, Metric::Euclidean).unwrap();
        let longest = mst.iter().map(|e| e.distance).fold(0.0, f64::max);
        assert!((eps0 - longest).abs() <= 1e-9, "{eps0} vs {longest}");
        assert!((mst.iter().map(|e| e.distance).sum::<f64>() - kruskal_weight(&d)).abs() < 1e-9);
    }
}

#[test]
fn mst_augmentation_connects_and_keeps_edges() {
    let data = random_dataset(60, 4, 7);
    let knn = build_knn_standard(&data, 1, Metric::Euclidean).unwrap();
    assert!(!connected_components(&knn).is_connected());
    let aug = augment_mst(&knn, &data, Metric::Euclidean).unwrap();
    assert!(connected_components(&aug).is_connected());
    assert!(knn.edges().iter().all(|e| aug.has_edge(e.src, e.dst)));
    assert!(aug.provenance().mst_augmented);
    assert!(augment_mst(&knn, &data, Metric::Cosine).is_err());
}

#[test]
fn extend_keeps_existing_edges() {
    let data = random_dataset(30, 3, 11);
    let g = build_knn_incremental(&data, 2, Metric::Euclidean, &NodeOrdering::random(30, 4)).unwrap();
    let new = [0.25f32, -0.5, 0.75];
    let h = extend_incremental(&g, &data, &new).unwrap();
    assert_eq!(h.n(), 31);
    assert_eq!(h.num_edges(), g.num_edges() + 2);
    assert!(g.edges().iter().all(|e| h.has_edge(e.src, e.dst)));
    assert!(connected_components(&h).is_connected());
    let mut nearest: Vec<(f64, usize)> = (0..30).map(|i| (distance(&new, data.row(i), Metric::Euclidean).unwrap(), i)).collect();
    nearest.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    assert!(h.has_edge(30, nearest[0].1) && h.has_edge(30, nearest[1].1));

    let single = VectorDataset::from_rows(&[vec![1.0, 0.0]]).unwrap();
    let g1 = NeighborGraph::empty(1, Metric::Euclidean, Provenance::new(Construction::IncKnn { k: 1, ordering_seed: 0 }));
    let h1 = extend_incremental(&g1, &single, &[0.0, 1.0]).unwrap();
    assert_eq!(h1.num_edges(), 1);
    assert!(connected_components(&h1).is_connected());
}

#[test]
fn edge_list_round_trip() {
    let data = random_dataset(25, 4, 3);
    let g = build_knn_incremental(&data, 3, Metric::Cosine, &NodeOrdering::random(25, 8)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.tsv");
    g.write_edge_list(&path).unwrap();
    assert_eq!(NeighborGraph::read_edge_list(&path).unwrap(), g);
    g.verify_distances(&data, 0.0).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn standard_knn_matches_oracle(n in 2usize..40, dim in 1usize..6, k in 1usize..8, seed in any::<u64>(), cosine in any::<bool>()) {
        let k = k.min(n - 1);
        let metric = if cosine { Metric::Cosine } else { Metric::Euclidean };
        let data = random_dataset(n, dim, seed);
        let g = build_knn_standard(&data, k, metric).unwrap();
        prop_assert_eq!(triples(&g), knn_oracle(&pairwise(&data, metric), k));
    }

    #[test]
    fn incremental_matches_oracle(n in 2usize..40, dim in 1usize..6, k in 1usize..8, seed in any::<u64>()) {
        let k = k.min(n - 1);
        let data = random_dataset(n, dim, seed);
        let ordering = NodeOrdering::random(n, seed ^ 0x5eed);
        let g = build_knn_incremental(&data, k, Metric::Euclidean, &ordering).unwrap();
        prop_assert_eq!(triples(&g), incremental_oracle(&pairwise(&data, Metric::Euclidean), k, ordering.as_slice()));
    }

    #[test]
    fn incremental_is_connected_with_exact_edge_count(n in 2usize..120, dim in 1usize..8, k in 1usize..10, seed in any::<u64>()) {
        let k = k.min(n - 1);
        let data = random_dataset(n, dim, seed);
        let g = build_knn_incremental(&data, k, Metric::Cosine, &NodeOrdering::random(n, seed)).unwrap();
        let r = connected_components(&g);
        prop_assert_eq!(r.num_components, 1);
        prop_assert_eq!(g.num_edges(), k * (n - k));
    }

    #[test]
    fn components_match_dfs(n in 1usize..60, pairs in proptest::collection::vec((0usize..60, 0usize..60), 0..80)) {
        let pairs: Vec<(usize, usize)> = pairs.into_iter().map(|(a, b)| (a % n, b % n)).filter(|(a, b)| a != b).collect();
        let mut pairs = pairs;
        pairs.sort_unstable();
        pairs.dedup();
        let edges = pairs.iter().map(|&(src, dst)| Edge { src, dst, distance: 1.0 }).collect();
        let g = NeighborGraph::from_edges(n, Metric::Euclidean, Provenance::new(Construction::Custom), edges).unwrap();
        prop_assert_eq!(connected_components(&g).num_components, dfs_components(n, &pairs));
        let labels = component_labels(&g);
        for &(a, b) in &pairs {
            prop_assert_eq!(labels[a], labels[b]);
        }
    }

    #[test]
    fn epsilon_matches_oracle(n in 2usize..40, dim in 1usize..5, frac in 0.0f64..1.0, seed in any::<u64>()) {
        let data = random_dataset(n, dim, seed);
        let d = pairwise(&data, Metric::Euclidean);
        let eps = frac * 2.0;
        let g = build_epsilon(&data, eps, Metric::Euclidean).unwrap();
        let mut want = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && d[i][j] <= eps {
                    want.push((i, j, d[i][j]));
                }
            }
        }
        prop_assert_eq!(triples(&g), want);
    }
}
