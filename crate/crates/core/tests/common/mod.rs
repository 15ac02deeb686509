// Shared helpers for the integration tests. Not every test file uses every item.
#![allow(dead_code)]

pub mod oracles;

use incgraph::graph::{Construction, Edge, NeighborGraph, Provenance};
use incgraph::{distance, Metric, VectorDataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_dataset(n: usize, dim: usize, seed: u64) -> VectorDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n * dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    VectorDataset::new(values, n, dim).unwrap()
}

/// Full pairwise distance matrix.
pub fn pairwise(data: &VectorDataset, metric: Metric) -> Vec<Vec<f64>> {
    let n = data.len();
    (0..n)
        .map(|i| (0..n).map(|j| distance(data.row(i), data.row(j), metric).unwrap()).collect())
        .collect()
}

/// Components of an undirected graph by depth-first search.
pub fn dfs_components(n: usize, pairs: &[(usize, usize)]) -> usize {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in pairs {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        count += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    count
}


/// Graph with the given directed edges; duplicates and self-loops dropped.
pub fn custom_graph(n: usize, pairs: &[(usize, usize)]) -> NeighborGraph {
    let mut p: Vec<(usize, usize)> = pairs.iter().copied().filter(|(a, b)| a != b).collect();
    p.sort_unstable();
    p.dedup();
    let edges = p.into_iter().map(|(src, dst)| Edge { src, dst, distance: 1.0 }).collect();
    NeighborGraph::from_edges(n, Metric::Euclidean, Provenance::new(Construction::Custom), edges).unwrap()
}

/// Standard k-NN graph over the low-intrinsic-dimension blob corpus, with
/// the blob labels.
pub fn blob_knn_graph(n: usize, k: usize) -> (NeighborGraph, Vec<usize>) {
    let data = incgraph::synth::gaussian_blobs(&incgraph::synth::BlobConfig {
        n,
        dim: 16,
        centers: 3,
        separation: 6.0,
        outlier_fraction: 0.05,
        intrinsic_dim: Some(4),
        seed: 1,
    })
    .unwrap();
    let labels = data.labels().unwrap().ids().to_vec();
    (incgraph::build_knn_standard(&data, k, Metric::Euclidean).unwrap(), labels)
}

/// `components` connected pieces (each at least 2 nodes) with random chords
/// and random edge directions.
pub fn crafted(components: usize, max_n: usize, seed: u64) -> (usize, Vec<(usize, usize)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    let mut start = 0;
    for _ in 0..components {
        let size = rng.random_range(2..=(max_n / components).max(2));
        for v in 1..size {
            let u = rng.random_range(0..v);
            edges.push(if rng.random() { (start + u, start + v) } else { (start + v, start + u) });
        }
        for _ in 0..size / 2 {
            let (a, b) = (rng.random_range(0..size), rng.random_range(0..size));
            if a != b {
                edges.push((start + a, start + b));
            }
        }
        start += size;
    }
    (start, edges)
}
