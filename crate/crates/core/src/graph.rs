//! Neighborhood graph representation, distances and connectivity.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::union_find::UnionFind;
use crate::vectorstore::VectorDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Cosine,
    Euclidean,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Cosine => "cosine",
            Metric::Euclidean => "euclidean",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Metric::Cosine),
            "euclidean" => Ok(Metric::Euclidean),
            other => Err(Error::param(format!("unknown metric `{other}`"))),
        }
    }
}

/// `sum f(u[i], v[i])` over four interleaved partial sums. The order is
/// fixed, so every caller gets bit-identical results, and the independent
/// lanes let the compiler use vector instructions.
#[inline]
fn lane_sum(u: &[f64], v: &[f64], f: impl Fn(f64, f64) -> f64) -> f64 {
    let (cu, tu) = u.as_chunks::<4>();
    let (cv, tv) = v.as_chunks::<4>();
    let mut acc = [0.0; 4];
    for (a, b) in cu.iter().zip(cv) {
        for l in 0..4 {
            acc[l] += f(a[l], b[l]);
        }
    }
    let tail: f64 = tu.iter().zip(tv).map(|(&a, &b)| f(a, b)).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn norm(v: &[f64]) -> f64 {
    lane_sum(v, v, |a, _| a * a).sqrt()
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    lane_sum(u, v, |a, b| a * b)
}

fn cosine_from_parts(dot: f64, nu: f64, nv: f64) -> f64 {
    (1.0 - dot / (nu * nv)).clamp(0.0, 2.0)
}

fn euclidean(u: &[f64], v: &[f64]) -> f64 {
    lane_sum(u, v, |a, b| (a - b) * (a - b)).sqrt()
}

/// Distance between two vectors. Cosine distance is `1 - cos(u, v)` and lies
/// in `[0, 2]`; it is not a metric in the strict sense.
pub fn distance(u: &[f32], v: &[f32], metric: Metric) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::param(format!(
            "dimension mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let u: Vec<f64> = u.iter().map(|&x| x as f64).collect();
    let v: Vec<f64> = v.iter().map(|&x| x as f64).collect();
    match metric {
        Metric::Euclidean => Ok(euclidean(&u, &v)),
        Metric::Cosine => {
            let (nu, nv) = (norm(&u), norm(&v));
            if nu == 0.0 || nv == 0.0 {
                return Err(Error::Domain("cosine distance of a zero vector".into()));
            }
            Ok(cosine_from_parts(dot(&u, &v), nu, nv))
        }
    }
}

/// Dataset rows widened to `f64` with cached norms, so repeated distance
/// evaluations agree bit-for-bit with [`distance`].
#[derive(Debug, Clone)]
pub struct PreparedRows {
    rows: Vec<f64>,
    norms: Vec<f64>,
    dim: usize,
    metric: Metric,
}

impl PreparedRows {
    pub fn new(data: &VectorDataset, metric: Metric) -> Result<Self> {
        let mut p = PreparedRows {
            rows: Vec::with_capacity(data.len() * data.dim()),
            norms: Vec::with_capacity(data.len()),
            dim: data.dim(),
            metric,
        };
        for row in data.rows() {
            p.push(row)?;
        }
        Ok(p)
    }

    pub fn push(&mut self, row: &[f32]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::param(format!(
                "dimension mismatch: {} vs {}",
                row.len(),
                self.dim
            )));
        }
        let start = self.rows.len();
        self.rows.extend(row.iter().map(|&x| x as f64));
        let nrm = norm(&self.rows[start..]);
        if self.metric == Metric::Cosine && nrm == 0.0 {
            let idx = self.norms.len();
            self.rows.truncate(start);
            return Err(Error::Domain(format!(
                "row {idx} is the zero vector; cosine distance is undefined"
            )));
        }
        self.norms.push(nrm);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    /// Copy whose row `t` is row `perm[t]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        PreparedRows {
            rows: perm.iter().flat_map(|&i| self.row(i).iter().copied()).collect(),
            norms: perm.iter().map(|&i| self.norms[i]).collect(),
            dim: self.dim,
            metric: self.metric,
        }
    }

    /// Calls `f(j, dist(i, j))` for every `j` in `others`, in order.
    #[inline]
    pub fn scan(&self, i: usize, others: std::ops::Range<usize>, f: impl FnMut(usize, f64)) {
        #[cfg(target_arch = "x86_64")]
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the CPU supports AVX2, checked just above.
            return unsafe { self.scan_avx2(i, others, f) };
        }
        self.scan_portable(i, others, f)
    }

    /// Same loop compiled with wider vectors. Each lane performs the same
    /// operations in the same order, so distances are bit-identical.
    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn scan_avx2(&self, i: usize, others: std::ops::Range<usize>, f: impl FnMut(usize, f64)) {
        self.scan_portable(i, others, f)
    }

    #[inline(always)]
    fn scan_portable(&self, i: usize, others: std::ops::Range<usize>, mut f: impl FnMut(usize, f64)) {
        let x = self.row(i);
        match self.metric {
            Metric::Euclidean => {
                for j in others {
                    f(j, euclidean(x, self.row(j)));
                }
            }
            Metric::Cosine => {
                let nx = self.norms[i];
                for j in others {
                    f(j, cosine_from_parts(dot(x, self.row(j)), nx, self.norms[j]));
                }
            }
        }
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match self.metric {
            Metric::Euclidean => euclidean(self.row(i), self.row(j)),
            Metric::Cosine => cosine_from_parts(dot(self.row(i), self.row(j)), self.norms[i], self.norms[j]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub distance: f64,
}

/// How a graph was built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Construction {
    Knn { k: usize },
    IncKnn { k: usize, ordering_seed: u64 },
    Epsilon { epsilon: f64 },
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub construction: Construction,
    pub mst_augmented: bool,
}

impl Provenance {
    pub fn new(construction: Construction) -> Self {
        Provenance {
            construction,
            mst_augmented: false,
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.construction {
            Construction::Knn { k } => write!(f, "knn(k={k})")?,
            Construction::IncKnn { k, ordering_seed } => write!(f, "inc_knn(k={k},seed={ordering_seed})")?,
            Construction::Epsilon { epsilon } => write!(f, "epsilon(eps={epsilon})")?,
            Construction::Custom => f.write_str("custom")?,
        }
        if self.mst_augmented {
            f.write_str("+mst")?;
        }
        Ok(())
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::format("graph header", format!("unrecognised provenance `{s}`"));
        let (body, mst) = match s.strip_suffix("+mst") {
            Some(b) => (b, true),
            None => (s, false),
        };
        let construction = if body == "custom" {
            Construction::Custom
        } else {
            let (name, rest) = body.split_once('(').ok_or_else(bad)?;
            let args = rest.strip_suffix(')').ok_or_else(bad)?;
            let mut k = None;
            let mut seed = None;
            let mut eps = None;
            for kv in args.split(',') {
                let (key, val) = kv.split_once('=').ok_or_else(bad)?;
                match key {
                    "k" => k = Some(val.parse::<usize>().map_err(|_| bad())?),
                    "seed" => seed = Some(val.parse::<u64>().map_err(|_| bad())?),
                    "eps" => eps = Some(val.parse::<f64>().map_err(|_| bad())?),
                    _ => return Err(bad()),
                }
            }
            match name {
                "knn" => Construction::Knn { k: k.ok_or_else(bad)? },
                "inc_knn" => Construction::IncKnn {
                    k: k.ok_or_else(bad)?,
                    ordering_seed: seed.ok_or_else(bad)?,
                },
                "epsilon" => Construction::Epsilon {
                    epsilon: eps.ok_or_else(bad)?,
                },
                _ => return Err(bad()),
            }
        };
        Ok(Provenance {
            construction,
            mst_augmented: mst,
        })
    }
}

/// Directed neighborhood graph stored as an edge list sorted by `(src, dst)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    n: usize,
    edges: Vec<Edge>,
    metric: Metric,
    provenance: Provenance,
}

impl NeighborGraph {
    pub fn empty(n: usize, metric: Metric, provenance: Provenance) -> Self {
        NeighborGraph {
            n,
            edges: Vec::new(),
            metric,
            provenance,
        }
    }

    /// Validates and canonicalises an edge list.
    pub fn from_edges(n: usize, metric: Metric, provenance: Provenance, mut edges: Vec<Edge>) -> Result<Self> {
        for e in &edges {
            if e.src >= n || e.dst >= n {
                return Err(Error::Validation(format!(
                    "edge {}->{} out of range for n={n}",
                    e.src, e.dst
                )));
            }
            if e.src == e.dst {
                return Err(Error::Validation(format!("self-loop at node {}", e.src)));
            }
            if !(e.distance >= 0.0) || !e.distance.is_finite() {
                return Err(Error::Validation(format!(
                    "edge {}->{} has invalid distance {}",
                    e.src, e.dst, e.distance
                )));
            }
        }
        edges.sort_by_key(|e| (e.src, e.dst));
        if let Some(w) = edges.windows(2).find(|w| (w[0].src, w[0].dst) == (w[1].src, w[1].dst)) {
            return Err(Error::Validation(format!(
                "duplicate edge {}->{}",
                w[0].src, w[0].dst
            )));
        }
        Ok(NeighborGraph {
            n,
            edges,
            metric,
            provenance,
        })
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_sorted_unchecked(n: usize, metric: Metric, provenance: Provenance, edges: Vec<Edge>) -> Self {
        debug_assert!(edges.windows(2).all(|w| (w[0].src, w[0].dst) < (w[1].src, w[1].dst)));
        NeighborGraph {
            n,
            edges,
            metric,
            provenance,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn set_provenance(&mut self, provenance: Provenance) {
        self.provenance = provenance;
    }

    pub fn has_edge(&self, src: usize, dst: usize) -> bool {
        self.edges
            .binary_search_by_key(&(src, dst), |e| (e.src, e.dst))
            .is_ok()
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            deg[e.src] += 1;
        }
        deg
    }

    /// Unordered pairs `(i, j)`, `i < j`, joined by an edge in either direction.
    pub fn undirected_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|e| (e.src.min(e.dst), e.src.max(e.dst)))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }

    /// Sorted neighbor lists of the undirected view.
    pub fn undirected_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for (i, j) in self.undirected_pairs() {
            adj[i].push(j);
            adj[j].push(i);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    /// Checks that every stored distance matches the dataset within `tol`.
    pub fn verify_distances(&self, data: &VectorDataset, tol: f64) -> Result<()> {
        for e in &self.edges {
            let d = distance(data.row(e.src), data.row(e.dst), self.metric)?;
            if (d - e.distance).abs() > tol {
                return Err(Error::Validation(format!(
                    "edge {}->{} stores {} but distance is {d}",
                    e.src, e.dst, e.distance
                )));
            }
        }
        Ok(())
    }

    pub fn write_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "# n={} metric={} provenance={}", self.n, self.metric, self.provenance)?;
        for e in &self.edges {
            writeln!(w, "{}\t{}\t{}", e.src, e.dst, e.distance)?;
        }
        Ok(())
    }

    pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_edge_list(&text)
    }

    pub fn parse_edge_list(text: &str) -> Result<Self> {
        const CTX: &str = "edge list";
        let mut lines = text.lines();
        let header = lines
            .next()
            .and_then(|h| h.strip_prefix("# "))
            .ok_or_else(|| Error::format(CTX, "missing `# n=...` header"))?;
        let (mut n, mut metric, mut prov) = (None, None, None);
        for field in header.split_whitespace() {
            match field.split_once('=') {
                Some(("n", v)) => n = v.parse::<usize>().ok(),
                Some(("metric", v)) => metric = Some(v.parse::<Metric>()?),
                Some(("provenance", v)) => prov = Some(v.parse::<Provenance>()?),
                _ => return Err(Error::format(CTX, format!("unexpected header field `{field}`"))),
            }
        }
        let n = n.ok_or_else(|| Error::format(CTX, "header lacks n"))?;
        let metric = metric.ok_or_else(|| Error::format(CTX, "header lacks metric"))?;
        let prov = prov.ok_or_else(|| Error::format(CTX, "header lacks provenance"))?;
        let mut edges = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let mut next = || {
                parts
                    .next()
                    .ok_or_else(|| Error::format(CTX, format!("line {}: too few fields", i + 2)))
            };
            let bad = |_| Error::format(CTX, format!("line {}: malformed number", i + 2));
            let src = next()?.parse::<usize>().map_err(bad)?;
            let dst = next()?.parse::<usize>().map_err(bad)?;
            let distance = next()?
                .parse::<f64>()
                .map_err(|_| Error::format(CTX, format!("line {}: malformed distance", i + 2)))?;
            edges.push(Edge { src, dst, distance });
        }
        Self::from_edges(n, metric, prov, edges)
    }
}

/// Connectivity summary in the layout of the component tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub num_components: usize,
    pub max_component_size: usize,
    /// Edges of the relation as constructed: directed edges for k-NN
    /// relations, unordered pairs for the symmetric epsilon relation.
    pub graph_edges: usize,
    /// Non-zeros of `A | A^T`.
    pub digraph_edges: usize,
}

impl ComponentReport {
    pub fn is_connected(&self) -> bool {
        self.num_components == 1
    }
}

fn union_find_of(graph: &NeighborGraph) -> UnionFind {
    let mut uf = UnionFind::new(graph.n);
    for e in &graph.edges {
        uf.union(e.src, e.dst);
    }
    uf
}

/// Connected components of the undirected view.
pub fn connected_components(graph: &NeighborGraph) -> ComponentReport {
    let mut uf = union_find_of(graph);
    let pairs = graph.undirected_pairs().len();
    let graph_edges = match graph.provenance.construction {
        Construction::Epsilon { .. } => pairs,
        _ => graph.edges.len(),
    };
    ComponentReport {
        num_components: uf.num_sets(),
        max_component_size: uf.max_set_size(),
        graph_edges,
        digraph_edges: 2 * pairs,
    }
}

/// Component id of every node, numbered by smallest member.
pub fn component_labels(graph: &NeighborGraph) -> Vec<usize> {
    union_find_of(graph).labels()
}

/// `W = (A + A^T) / 2` on the 0/1 adjacency.
pub fn symmetrize(graph: &NeighborGraph) -> CsrMatrix {
    let triplets = graph
        .edges
        .iter()
        .flat_map(|e| [(e.src, e.dst, 0.5), (e.dst, e.src, 0.5)]);
    CsrMatrix::from_triplets(graph.n, triplets.collect::<Vec<_>>())
}
