//! Graph construction: standard k-NN, incremental k-NN, epsilon-radius
//! graphs, the epsilon search and MST augmentation.
//!
//! All nearest-neighbor searches are exact. At equal distance the smaller
//! node index wins.

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Construction, Edge, Metric, NeighborGraph, PreparedRows, Provenance};
use crate::union_find::UnionFind;
use crate::vectorstore::VectorDataset;

pub const DEFAULT_EPSILON_TOL: f64 = 1e-6;
pub const MAX_BISECTION_STEPS: usize = 64;

/// Seed for run `stream` derived from a base seed. Counter-based, so any run
/// can be regenerated without replaying earlier ones.
pub fn derive_seed(base_seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(stream);
    rng.next_u64()
}

/// Node insertion order for the incremental builder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeOrdering {
    perm: Vec<usize>,
    seed: u64,
}

impl NodeOrdering {
    pub fn identity(n: usize) -> Self {
        NodeOrdering {
            perm: (0..n).collect(),
            seed: 0,
        }
    }

    /// Uniformly random permutation drawn from `seed`.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        NodeOrdering { perm, seed }
    }

    pub fn from_permutation(perm: Vec<usize>, seed: u64) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::param("ordering is not a permutation"));
            }
        }
        Ok(NodeOrdering { perm, seed })
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }
}

#[inline(always)]
fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Keeps the `k` nearest candidates, in ascending (distance, index) order.
fn keep_nearest(cands: &mut Vec<(f64, usize)>, k: usize) {
    if cands.len() > k {
        cands.select_nth_unstable_by(k - 1, by_distance_then_index);
        cands.truncate(k);
    }
    cands.sort_unstable_by(by_distance_then_index);
}

/// The `k` smallest `(distance, index)` pairs seen so far, kept sorted.
struct TopK {
    k: usize,
    items: Vec<(f64, usize)>,
}

impl TopK {
    fn new(k: usize) -> Self {
        TopK {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    #[inline(always)]
    fn offer(&mut self, d: f64, j: usize) {
        // Most candidates lose to the current k-th neighbour.
        if self.items.len() == self.k
            && by_distance_then_index(&(d, j), &self.items[self.k - 1]) != std::cmp::Ordering::Less
        {
            return;
        }
        self.insert(d, j);
    }

    #[inline(never)]
    fn insert(&mut self, d: f64, j: usize) {
        if self.items.len() == self.k {
            self.items.pop();
        }
        let pos = self
            .items
            .partition_point(|p| by_distance_then_index(p, &(d, j)) == std::cmp::Ordering::Less);
        self.items.insert(pos, (d, j));
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(Error::param(format!("k must satisfy 1 <= k <= N-1 (k={k}, N={n})")));
    }
    Ok(())
}

fn edges_from(src: usize, nearest: &[(f64, usize)]) -> Vec<Edge> {
    let mut out: Vec<Edge> = nearest
        .iter()
        .map(|&(distance, dst)| Edge { src, dst, distance })
        .collect();
    out.sort_unstable_by_key(|e| e.dst);
    out
}

/// Every node points at its `k` nearest other nodes.
pub fn build_knn_standard(data: &VectorDataset, k: usize, metric: Metric) -> Result<NeighborGraph> {
    let n = data.len();
    check_k(k, n)?;
    let rows = PreparedRows::new(data, metric)?;
    let edges: Vec<Edge> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut top = TopK::new(k);
            rows.scan(i, 0..i, |j, d| top.offer(d, j));
            rows.scan(i, i + 1..n, |j, d| top.offer(d, j));
            edges_from(i, &top.items)
        })
        .collect();
    Ok(NeighborGraph::from_sorted_unchecked(
        n,
        metric,
        Provenance::new(Construction::Knn { k }),
        edges,
    ))
}

/// Incremental k-NN construction.
///
/// The first `k` nodes of `ordering` start without edges. Every later node is
/// linked to its `k` nearest among the nodes inserted before it, so each
/// insertion attaches to the existing component and the result is connected
/// with exactly `k (N - k)` edges. Edges point from the inserted node to its
/// neighbors; node ids are dataset row indices.
pub fn build_knn_incremental(
    data: &VectorDataset,
    k: usize,
    metric: Metric,
    ordering: &NodeOrdering,
) -> Result<NeighborGraph> {
    let n = data.len();
    check_k(k, n)?;
    if ordering.len() != n {
        return Err(Error::param(format!(
            "ordering covers {} nodes, dataset has {n}",
            ordering.len()
        )));
    }
    let order = ordering.as_slice();
    // Rows in insertion order, so each scan reads memory sequentially.
    let rows = PreparedRows::new(data, metric)?.permuted(order);
    let mut edges = Vec::with_capacity(k * (n - k));
    for t in k..n {
        let mut top = TopK::new(k);
        rows.scan(t, 0..t, |q, d| top.offer(d, order[q]));
        edges.extend(edges_from(order[t], &top.items));
    }
    edges.sort_unstable_by_key(|e| (e.src, e.dst));
    Ok(NeighborGraph::from_sorted_unchecked(
        n,
        metric,
        Provenance::new(Construction::IncKnn {
            k,
            ordering_seed: ordering.seed(),
        }),
        edges,
    ))
}

/// Inserts one more node into an incremental graph. `data` holds the rows of
/// the existing nodes; the new node gets id `graph.n()`. Existing edges are
/// untouched.
pub fn extend_incremental(graph: &NeighborGraph, data: &VectorDataset, new_vector: &[f32]) -> Result<NeighborGraph> {
    let prov = graph.provenance();
    let k = match prov.construction {
        Construction::IncKnn { k, .. } if !prov.mst_augmented => k,
        _ => {
            return Err(Error::param(format!(
                "extend requires an incremental k-NN graph, got {prov}"
            )))
        }
    };
    let n = graph.n();
    if data.len() != n {
        return Err(Error::param(format!(
            "graph has {n} nodes but dataset has {} rows",
            data.len()
        )));
    }
    if n < k {
        return Err(Error::param(format!("graph has {n} nodes, fewer than k={k}")));
    }
    let mut rows = PreparedRows::new(data, graph.metric())?;
    rows.push(new_vector)?;
    let mut cands: Vec<(f64, usize)> = (0..n).map(|q| (rows.dist(n, q), q)).collect();
    keep_nearest(&mut cands, k);
    let mut edges = graph.edges().to_vec();
    edges.extend(edges_from(n, &cands));
    Ok(NeighborGraph::from_sorted_unchecked(n + 1, graph.metric(), prov, edges))
}

/// Undirected epsilon-radius graph; a pair is joined when its distance is at
/// most `epsilon`. Each pair is stored in both directions.
pub fn build_epsilon(data: &VectorDataset, epsilon: f64, metric: Metric) -> Result<NeighborGraph> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::param(format!("epsilon must be positive, got {epsilon}")));
    }
    let n = data.len();
    let rows = PreparedRows::new(data, metric)?;
    let edges: Vec<Edge> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let rows = &rows;
            (0..n).filter_map(move |j| {
                if i == j {
                    return None;
                }
                let d = rows.dist(i.min(j), i.max(j));
                (d <= epsilon).then_some(Edge { src: i, dst: j, distance: d })
            })
        })
        .collect();
    Ok(NeighborGraph::from_sorted_unchecked(
        n,
        metric,
        Provenance::new(Construction::Epsilon { epsilon }),
        edges,
    ))
}

/// Smallest epsilon (within `tol`) whose epsilon-graph is connected, found by
/// bisection on `[0, max pairwise distance]`.
pub fn find_epsilon0(data: &VectorDataset, metric: Metric, tol: f64) -> Result<f64> {
    let n = data.len();
    if n < 2 {
        return Err(Error::param("epsilon search needs at least two points"));
    }
    if !(tol > 0.0) {
        return Err(Error::param(format!("tolerance must be positive, got {tol}")));
    }
    let rows = PreparedRows::new(data, metric)?;
    // Condensed upper triangle, row-major.
    let dists: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let rows = &rows;
            (i + 1..n).map(move |j| rows.dist(i, j))
        })
        .collect();
    let connected_at = |eps: f64| {
        let mut uf = UnionFind::new(n);
        let mut idx = 0;
        for i in 0..n {
            for j in i + 1..n {
                if dists[idx] <= eps {
                    uf.union(i, j);
                }
                idx += 1;
            }
        }
        uf.num_sets() == 1
    };
    let mut lo = 0.0;
    let mut hi = dists.iter().copied().fold(0.0, f64::max);
    let mut steps = 0;
    while hi - lo > tol && steps < MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if connected_at(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
    }
    Ok(hi)
}

/// Exact minimum spanning tree of the complete distance graph (dense Prim,
/// O(N^2) time and O(N) memory). Edges point from the tree parent to the
/// child.
pub fn minimum_spanning_tree(data: &VectorDataset, metric: Metric) -> Result<Vec<Edge>> {
    let n = data.len();
    let rows = PreparedRows::new(data, metric)?;
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut tree = Vec::with_capacity(n.saturating_sub(1));
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        for v in 0..n {
            if !in_tree[v] {
                let d = rows.dist(current.min(v), current.max(v));
                if d < best[v] {
                    best[v] = d;
                    parent[v] = current;
                }
            }
        }
        let mut next = usize::MAX;
        for v in 0..n {
            if !in_tree[v] && (next == usize::MAX || best[v] < best[next]) {
                next = v;
            }
        }
        in_tree[next] = true;
        tree.push(Edge {
            src: parent[next],
            dst: next,
            distance: best[next],
        });
        current = next;
    }
    Ok(tree)
}

/// Union of `graph` with an MST of the complete pairwise-distance graph. MST
/// edges already present in either direction are not duplicated.
pub fn augment_mst(graph: &NeighborGraph, data: &VectorDataset, metric: Metric) -> Result<NeighborGraph> {
    if graph.n() != data.len() {
        return Err(Error::param(format!(
            "graph has {} nodes but dataset has {} rows",
            graph.n(),
            data.len()
        )));
    }
    if metric != graph.metric() {
        return Err(Error::param(format!(
            "graph was built with {} but MST requested with {metric}",
            graph.metric()
        )));
    }
    let mut edges = graph.edges().to_vec();
    for e in minimum_spanning_tree(data, metric)? {
        if !graph.has_edge(e.src, e.dst) && !graph.has_edge(e.dst, e.src) {
            edges.push(e);
        }
    }
    edges.sort_unstable_by_key(|e| (e.src, e.dst));
    let mut prov = graph.provenance();
    prov.mst_augmented = true;
    Ok(NeighborGraph::from_sorted_unchecked(graph.n(), metric, prov, edges))
}
