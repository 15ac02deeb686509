//! Graph- and node-level statistics, exact and Monte-Carlo.
//!
//! Everything except PageRank is computed on the undirected view of the
//! graph. PageRank follows edge direction.

use rayon::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::construction::derive_seed;
use crate::error::{Error, Result};
use crate::graph::NeighborGraph;

const Z95: f64 = 1.959_963_984_540_054;

/// Undirected simple graph derived from a [`NeighborGraph`].
#[derive(Debug, Clone)]
pub struct UndirectedView {
    pub adj: Vec<Vec<usize>>,
    pub edges: Vec<(usize, usize)>,
}

impl UndirectedView {
    pub fn new(graph: &NeighborGraph) -> Self {
        UndirectedView {
            adj: graph.undirected_adjacency(),
            edges: graph.undirected_pairs(),
        }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    fn common_neighbors(&self, u: usize, v: usize) -> usize {
        let (a, b) = (&self.adj[u], &self.adj[v]);
        let (mut i, mut j, mut count) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        count
    }

    /// `C_v`; zero for nodes with fewer than two neighbors.
    pub fn local_clustering(&self, v: usize) -> f64 {
        let k = self.degree(v);
        if k < 2 {
            return 0.0;
        }
        let links: usize = self.adj[v].iter().map(|&u| self.common_neighbors(u, v)).sum::<usize>() / 2;
        2.0 * links as f64 / (k * (k - 1)) as f64
    }

    fn wedges_at(&self, v: usize) -> u64 {
        let k = self.degree(v) as u64;
        k * k.saturating_sub(1) / 2
    }
}

pub fn density(graph: &NeighborGraph) -> Result<f64> {
    let n = graph.n();
    if n < 2 {
        return Err(Error::param("density needs at least two nodes"));
    }
    let e = graph.undirected_pairs().len();
    Ok(2.0 * e as f64 / (n as f64 * (n as f64 - 1.0)))
}

/// Degree assortativity: Pearson correlation of endpoint degrees over edges,
/// each edge counted in both orientations.
pub fn assortativity(graph: &NeighborGraph) -> Result<f64> {
    assortativity_of(&UndirectedView::new(graph))
}

fn assortativity_of(view: &UndirectedView) -> Result<f64> {
    if view.edges.len() < 2 {
        return Err(Error::UndefinedStatistic("assortativity"));
    }
    let mut m = AssortMoments::default();
    for &(u, v) in &view.edges {
        m.add(view.degree(u) as f64, view.degree(v) as f64);
    }
    m.value().ok_or(Error::UndefinedStatistic("assortativity"))
}

/// Three times the triangle count over the number of connected triples.
/// Zero when there are no connected triples.
pub fn transitivity(graph: &NeighborGraph) -> Result<f64> {
    if graph.n() < 3 {
        return Err(Error::param("transitivity needs at least three nodes"));
    }
    Ok(transitivity_of(&UndirectedView::new(graph)))
}

fn transitivity_of(view: &UndirectedView) -> f64 {
    let wedges: u64 = (0..view.n()).map(|v| view.wedges_at(v)).sum();
    if wedges == 0 {
        return 0.0;
    }
    // Each triangle is seen once per edge, so three times in total.
    let closed: u64 = view
        .edges
        .iter()
        .map(|&(u, v)| view.common_neighbors(u, v) as u64)
        .sum();
    closed as f64 / wedges as f64
}

/// Mean of `C_v` over all nodes; nodes of degree below two contribute zero.
pub fn local_clustering_avg(graph: &NeighborGraph) -> f64 {
    local_clustering_avg_of(&UndirectedView::new(graph))
}

fn local_clustering_avg_of(view: &UndirectedView) -> f64 {
    if view.n() == 0 {
        return 0.0;
    }
    (0..view.n()).map(|v| view.local_clustering(v)).sum::<f64>() / view.n() as f64
}

/// Fraction of undirected edges joining nodes with the same label.
pub fn homophily(graph: &NeighborGraph, labels: &[usize]) -> Result<f64> {
    if labels.len() != graph.n() {
        return Err(Error::param(format!(
            "{} labels for {} nodes",
            labels.len(),
            graph.n()
        )));
    }
    let pairs = graph.undirected_pairs();
    if pairs.is_empty() {
        return Err(Error::UndefinedStatistic("homophily"));
    }
    let same = pairs.iter().filter(|&&(u, v)| labels[u] == labels[v]).count();
    Ok(same as f64 / pairs.len() as f64)
}

pub const DEFAULT_DAMPING: f64 = 0.85;
pub const DEFAULT_PAGERANK_TOL: f64 = 1e-10;
pub const DEFAULT_PAGERANK_ITERS: usize = 200;

/// PageRank by power iteration on the directed graph. Dangling nodes spread
/// their score uniformly. Stops when the L1 change drops below `tol`.
pub fn pagerank(graph: &NeighborGraph, damping: f64, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    if !(damping > 0.0 && damping < 1.0) {
        return Err(Error::param(format!("damping must be in (0,1), got {damping}")));
    }
    let n = graph.n();
    if n == 0 {
        return Ok(Vec::new());
    }
    let out = graph.out_degrees();
    let mut rank = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for iter in 1..=max_iter {
        let dangling: f64 = (0..n).filter(|&i| out[i] == 0).map(|i| rank[i]).sum();
        let base = (1.0 - damping) / n as f64 + damping * dangling / n as f64;
        next.iter_mut().for_each(|v| *v = base);
        for e in graph.edges() {
            next[e.dst] += damping * rank[e.src] / out[e.src] as f64;
        }
        residual = next.iter().zip(&rank).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if residual < tol {
            log::debug!("pagerank converged after {iter} iterations");
            let total: f64 = rank.iter().sum();
            rank.iter_mut().for_each(|v| *v /= total);
            return Ok(rank);
        }
    }
    Err(Error::Numerical {
        message: "PageRank did not converge".into(),
        iterations: max_iter,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PagerankSummary {
    pub mean: f64,
    pub max: f64,
    /// Shannon entropy (nats) of the score distribution.
    pub entropy: f64,
}

impl PagerankSummary {
    pub fn of(scores: &[f64]) -> Self {
        let n = scores.len().max(1) as f64;
        PagerankSummary {
            mean: scores.iter().sum::<f64>() / n,
            max: scores.iter().copied().fold(0.0, f64::max),
            entropy: -scores.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>(),
        }
    }
}

/// One statistic, possibly estimated by sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// `None` when the statistic is undefined for the graph.
    pub value: Option<f64>,
    pub sampled: bool,
    /// 95% confidence half-width; present only for sampled values.
    pub ci_halfwidth: Option<f64>,
    pub samples: Option<u64>,
    pub converged: bool,
}

impl Estimate {
    fn exact(value: Option<f64>) -> Self {
        Estimate {
            value,
            sampled: false,
            ci_halfwidth: None,
            samples: None,
            converged: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DocStats {
    pub documents: usize,
    pub avg_words: f64,
    pub avg_sentences: f64,
    pub avg_chars: f64,
}

/// Whitespace words, terminal-punctuation sentences and characters.
pub fn doc_stats<S: AsRef<str>>(texts: &[S]) -> DocStats {
    let n = texts.len().max(1) as f64;
    let (mut words, mut sentences, mut chars) = (0usize, 0usize, 0usize);
    for t in texts {
        let t = t.as_ref();
        words += t.split_whitespace().count();
        sentences += t
            .split(['.', '!', '?'])
            .filter(|s| s.chars().any(char::is_alphanumeric))
            .count();
        chars += t.chars().count();
    }
    DocStats {
        documents: texts.len(),
        avg_words: words as f64 / n,
        avg_sentences: sentences as f64 / n,
        avg_chars: chars as f64 / n,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub nodes: usize,
    pub edges: usize,
    pub directed_edges: usize,
    pub density: Estimate,
    pub assortativity: Estimate,
    pub transitivity: Estimate,
    pub avg_local_clustering: Estimate,
    pub pagerank: Option<PagerankSummary>,
    pub homophily: Estimate,
    pub documents: Option<DocStats>,
}

#[derive(Debug, Clone, Copy)]
pub struct McConfig {
    pub seed: u64,
    pub target_halfwidth: f64,
    /// Graphs above either size threshold are sampled instead of computed exactly.
    pub node_threshold: usize,
    pub edge_threshold: usize,
    pub batch_size: usize,
    /// Batches drawn in parallel per round.
    pub workers: usize,
    pub min_samples: u64,
    pub max_samples: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            seed: 0,
            target_halfwidth: 0.005,
            node_threshold: 50_000,
            edge_threshold: 5_000_000,
            batch_size: 1000,
            workers: 4,
            min_samples: 2000,
            max_samples: 5_000_000,
        }
    }
}

/// Edge sums for the assortativity ratio, with the second moments its
/// sampled half-width needs.
#[derive(Debug, Clone, Copy, Default)]
struct AssortMoments {
    count: f64,
    // x = j k, y = (j + k) / 2, z = (j^2 + k^2) / 2
    sx: f64,
    sy: f64,
    sz: f64,
    sxx: f64,
    syy: f64,
    szz: f64,
    sxy: f64,
    sxz: f64,
    syz: f64,
}

impl AssortMoments {
    fn add(&mut self, j: f64, k: f64) {
        let (x, y, z) = (j * k, 0.5 * (j + k), 0.5 * (j * j + k * k));
        self.count += 1.0;
        self.sx += x;
        self.sy += y;
        self.sz += z;
        self.sxx += x * x;
        self.syy += y * y;
        self.szz += z * z;
        self.sxy += x * y;
        self.sxz += x * z;
        self.syz += y * z;
    }

    fn merge(&mut self, o: &AssortMoments) {
        self.count += o.count;
        self.sx += o.sx;
        self.sy += o.sy;
        self.sz += o.sz;
        self.sxx += o.sxx;
        self.syy += o.syy;
        self.szz += o.szz;
        self.sxy += o.sxy;
        self.sxz += o.sxz;
        self.syz += o.syz;
    }

    fn value(&self) -> Option<f64> {
        let (a, mu, b) = (self.sx / self.count, self.sy / self.count, self.sz / self.count);
        let den = b - mu * mu;
        if den.abs() <= 1e-12 * b.abs().max(1.0) {
            return None;
        }
        Some(((a - mu * mu) / den).clamp(-1.0, 1.0))
    }

    /// Delta-method 95% half-width of the ratio estimator.
    fn halfwidth(&self) -> Option<f64> {
        let n = self.count;
        let (a, mu, b) = (self.sx / n, self.sy / n, self.sz / n);
        let den = b - mu * mu;
        if den.abs() <= 1e-12 * b.abs().max(1.0) {
            return None;
        }
        let r = (a - mu * mu) / den;
        let (ga, gb, gm) = (1.0 / den, -r / den, -2.0 * mu * (1.0 - r) / den);
        let cov = |sab: f64, sa: f64, sb: f64| sab / n - (sa / n) * (sb / n);
        let (vxx, vyy, vzz) = (cov(self.sxx, self.sx, self.sx), cov(self.syy, self.sy, self.sy), cov(self.szz, self.sz, self.sz));
        let (vxy, vxz, vyz) = (cov(self.sxy, self.sx, self.sy), cov(self.sxz, self.sx, self.sz), cov(self.syz, self.sy, self.sz));
        let var = ga * ga * vxx + gb * gb * vzz + gm * gm * vyy + 2.0 * (ga * gb * vxz + ga * gm * vxy + gb * gm * vyz);
        Some(Z95 * (var.max(0.0) / n).sqrt())
    }
}

/// Streaming mean and variance (Chan et al. pairwise combination).
#[derive(Debug, Clone, Copy, Default)]
struct MeanVar {
    count: f64,
    mean: f64,
    m2: f64,
}

impl MeanVar {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let d = x - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, o: &MeanVar) {
        if o.count == 0.0 {
            return;
        }
        let total = self.count + o.count;
        let d = o.mean - self.mean;
        self.mean += d * o.count / total;
        self.m2 += o.m2 + d * d * self.count * o.count / total;
        self.count = total;
    }

    fn halfwidth(&self) -> f64 {
        if self.count < 2.0 {
            return f64::INFINITY;
        }
        Z95 * (self.m2 / (self.count - 1.0) / self.count).sqrt()
    }
}

trait Sampler: Sync {
    type Acc: Default + Send;
    fn population(&self) -> u64;
    fn draw(&self, rng: &mut ChaCha8Rng, acc: &mut Self::Acc);
    fn merge(into: &mut Self::Acc, from: &Self::Acc);
    fn value(acc: &Self::Acc) -> Option<f64>;
    fn halfwidth(acc: &Self::Acc) -> Option<f64>;
    fn samples(acc: &Self::Acc) -> u64;
    fn exact(&self) -> Option<f64>;
}

/// Oversampling factor applied to the size planned from the pilot.
const PLAN_MARGIN: f64 = 1.5;

/// Two-stage sampling. A pilot of `min_samples` draws only sizes the main
/// sample, which is drawn afresh at that size and returned as is; `converged`
/// records whether it met the target. Stopping on the reported draws' own
/// half-width, or extending them until it is small enough, would favour
/// samples that happen to look less variable and bias the estimate.
fn run_sampler<S: Sampler>(sampler: &S, config: &McConfig, stream: u64) -> Estimate {
    let population = sampler.population();
    if population == 0 {
        return Estimate::exact(sampler.exact());
    }
    let mut next_batch = 0u64;
    let mut pilot = S::Acc::default();
    draw_until(sampler, config, stream, &mut next_batch, &mut pilot, config.min_samples.max(1));
    let planned = match S::halfwidth(&pilot) {
        Some(h) if h.is_finite() && config.target_halfwidth > 0.0 => {
            S::samples(&pilot) as f64 * (h / config.target_halfwidth).powi(2) * PLAN_MARGIN
        }
        _ => f64::INFINITY,
    };
    let goal = planned.ceil().clamp(config.min_samples.max(1) as f64, config.max_samples.max(1) as f64) as u64;
    if goal >= population {
        // The sample would touch as many items as exist; enumerate instead.
        return Estimate::exact(sampler.exact());
    }
    let mut acc = S::Acc::default();
    draw_until(sampler, config, stream, &mut next_batch, &mut acc, goal);
    let hw = S::halfwidth(&acc);
    Estimate {
        value: S::value(&acc),
        sampled: true,
        ci_halfwidth: hw,
        samples: Some(S::samples(&acc)),
        converged: hw.is_some_and(|h| h <= config.target_halfwidth),
    }
}

/// Adds parallel rounds of draws to `acc` until it holds `goal` of them.
fn draw_until<S: Sampler>(sampler: &S, config: &McConfig, stream: u64, next_batch: &mut u64, acc: &mut S::Acc, goal: u64) {
    let workers = config.workers.max(1) as u64;
    while S::samples(acc) < goal {
        let batches: Vec<S::Acc> = (0..workers)
            .into_par_iter()
            .map(|w| {
                let sub = derive_seed(config.seed, (stream << 40) | (*next_batch + w));
                let mut rng = ChaCha8Rng::seed_from_u64(sub);
                let mut local = S::Acc::default();
                for _ in 0..config.batch_size.max(1) {
                    sampler.draw(&mut rng, &mut local);
                }
                local
            })
            .collect();
        for b in &batches {
            S::merge(acc, b);
        }
        *next_batch += workers;
    }
}

struct ClusteringSampler<'a>(&'a UndirectedView);

impl Sampler for ClusteringSampler<'_> {
    type Acc = MeanVar;
    fn population(&self) -> u64 {
        self.0.n() as u64
    }
    fn draw(&self, rng: &mut ChaCha8Rng, acc: &mut MeanVar) {
        acc.push(self.0.local_clustering(rng.random_range(0..self.0.n())));
    }
    fn merge(into: &mut MeanVar, from: &MeanVar) {
        into.merge(from)
    }
    fn value(acc: &MeanVar) -> Option<f64> {
        Some(acc.mean)
    }
    fn halfwidth(acc: &MeanVar) -> Option<f64> {
        Some(acc.halfwidth())
    }
    fn samples(acc: &MeanVar) -> u64 {
        acc.count as u64
    }
    fn exact(&self) -> Option<f64> {
        Some(local_clustering_avg_of(self.0))
    }
}

struct HomophilySampler<'a> {
    view: &'a UndirectedView,
    labels: &'a [usize],
}

impl Sampler for HomophilySampler<'_> {
    type Acc = MeanVar;
    fn population(&self) -> u64 {
        self.view.edges.len() as u64
    }
    fn draw(&self, rng: &mut ChaCha8Rng, acc: &mut MeanVar) {
        let (u, v) = self.view.edges[rng.random_range(0..self.view.edges.len())];
        acc.push(if self.labels[u] == self.labels[v] { 1.0 } else { 0.0 });
    }
    fn merge(into: &mut MeanVar, from: &MeanVar) {
        into.merge(from)
    }
    fn value(acc: &MeanVar) -> Option<f64> {
        Some(acc.mean)
    }
    fn halfwidth(acc: &MeanVar) -> Option<f64> {
        Some(acc.halfwidth())
    }
    fn samples(acc: &MeanVar) -> u64 {
        acc.count as u64
    }
    fn exact(&self) -> Option<f64> {
        let e = &self.view.edges;
        if e.is_empty() {
            return None;
        }
        Some(e.iter().filter(|&&(u, v)| self.labels[u] == self.labels[v]).count() as f64 / e.len() as f64)
    }
}

/// Edge-sampled assortativity: the ratio of sampled moments.
struct AssortSampler<'a>(&'a UndirectedView);

impl Sampler for AssortSampler<'_> {
    type Acc = AssortMoments;
    fn population(&self) -> u64 {
        self.0.edges.len() as u64
    }
    fn draw(&self, rng: &mut ChaCha8Rng, acc: &mut AssortMoments) {
        let (u, v) = self.0.edges[rng.random_range(0..self.0.edges.len())];
        acc.add(self.0.degree(u) as f64, self.0.degree(v) as f64);
    }
    fn merge(into: &mut AssortMoments, from: &AssortMoments) {
        into.merge(from)
    }
    fn value(acc: &AssortMoments) -> Option<f64> {
        acc.value()
    }
    fn halfwidth(acc: &AssortMoments) -> Option<f64> {
        acc.halfwidth()
    }
    fn samples(acc: &AssortMoments) -> u64 {
        acc.count as u64
    }
    fn exact(&self) -> Option<f64> {
        assortativity_of(self.0).ok()
    }
}

/// Samples connected triples uniformly: a center with probability
/// proportional to its wedge count, then two distinct neighbors.
struct TriangleSampler<'a> {
    view: &'a UndirectedView,
    cumulative: Vec<u64>,
}

impl<'a> TriangleSampler<'a> {
    fn new(view: &'a UndirectedView) -> Self {
        let mut total = 0;
        let cumulative = (0..view.n())
            .map(|v| {
                total += view.wedges_at(v);
                total
            })
            .collect();
        TriangleSampler { view, cumulative }
    }
}

impl Sampler for TriangleSampler<'_> {
    type Acc = MeanVar;
    fn population(&self) -> u64 {
        self.cumulative.last().copied().unwrap_or(0)
    }
    fn draw(&self, rng: &mut ChaCha8Rng, acc: &mut MeanVar) {
        let target = rng.random_range(0..self.population());
        let center = self.cumulative.partition_point(|&c| c <= target);
        let nb = &self.view.adj[center];
        let a = rng.random_range(0..nb.len());
        let mut b = rng.random_range(0..nb.len() - 1);
        if b >= a {
            b += 1;
        }
        acc.push(if self.view.adjacent(nb[a], nb[b]) { 1.0 } else { 0.0 });
    }
    fn merge(into: &mut MeanVar, from: &MeanVar) {
        into.merge(from)
    }
    fn value(acc: &MeanVar) -> Option<f64> {
        Some(acc.mean)
    }
    fn halfwidth(acc: &MeanVar) -> Option<f64> {
        Some(acc.halfwidth())
    }
    fn samples(acc: &MeanVar) -> u64 {
        acc.count as u64
    }
    fn exact(&self) -> Option<f64> {
        Some(transitivity_of(self.view))
    }
}

/// Full statistics report. Graphs under the configured size thresholds are
/// computed exactly; larger ones use node-, edge- and triple-sampling with
/// sample sizes planned for a 95% confidence half-width of `target_halfwidth`.
pub fn estimate_stats_mc(graph: &NeighborGraph, labels: Option<&[usize]>, config: &McConfig) -> Result<StatsReport> {
    let view = UndirectedView::new(graph);
    let sample = graph.n() > config.node_threshold || view.edges.len() > config.edge_threshold;
    stats_report(graph, &view, labels, config, sample)
}

/// Same as [`estimate_stats_mc`] but always takes the sampling path.
pub fn sample_stats(graph: &NeighborGraph, labels: Option<&[usize]>, config: &McConfig) -> Result<StatsReport> {
    let view = UndirectedView::new(graph);
    stats_report(graph, &view, labels, config, true)
}

fn stats_report(
    graph: &NeighborGraph,
    view: &UndirectedView,
    labels: Option<&[usize]>,
    config: &McConfig,
    sample: bool,
) -> Result<StatsReport> {
    if let Some(l) = labels {
        if l.len() != graph.n() {
            return Err(Error::param(format!("{} labels for {} nodes", l.len(), graph.n())));
        }
    }
    let n = graph.n();
    let density = Estimate::exact(density(graph).ok());
    let pagerank = pagerank(graph, DEFAULT_DAMPING, DEFAULT_PAGERANK_TOL, DEFAULT_PAGERANK_ITERS)
        .ok()
        .map(|s| PagerankSummary::of(&s));
    let (assortativity, transitivity, clustering, homophily_est);
    if sample {
        assortativity = run_sampler(&AssortSampler(view), config, 1);
        transitivity = run_sampler(&TriangleSampler::new(view), config, 2);
        clustering = run_sampler(&ClusteringSampler(view), config, 3);
        homophily_est = match labels {
            Some(l) => run_sampler(&HomophilySampler { view, labels: l }, config, 4),
            None => Estimate::exact(None),
        };
    } else {
        assortativity = Estimate::exact(assortativity_of(view).ok());
        transitivity = Estimate::exact((n >= 3).then(|| transitivity_of(view)));
        clustering = Estimate::exact(Some(local_clustering_avg_of(view)));
        homophily_est = Estimate::exact(labels.and_then(|l| homophily(graph, l).ok()));
    }
    Ok(StatsReport {
        nodes: n,
        edges: view.edges.len(),
        directed_edges: graph.num_edges(),
        density,
        assortativity,
        transitivity,
        avg_local_clustering: clustering,
        pagerank,
        homophily: homophily_est,
        documents: None,
    })
}
