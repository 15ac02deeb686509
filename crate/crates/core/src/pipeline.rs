//! End-to-end experiments: build, embed, assign, score, and JSON reports.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construction::{
    augment_mst, build_epsilon, build_knn_incremental, build_knn_standard, derive_seed, find_epsilon0,
    NodeOrdering, DEFAULT_EPSILON_TOL,
};
use crate::error::{Error, Result};
use crate::graph::{connected_components, ComponentReport, Metric, NeighborGraph};
use crate::metrics::{scores, ClusterScores};
use crate::spectral::{
    affinity_connection, affinity_gaussian, component_blocked_embedding, kmeans, kmeans_assign,
    laplacian_eigenmaps, qr_assign, AffinityKind, Assigner, KMeansConfig, SpectralEmbedding,
};
use crate::stats::{estimate_stats_mc, McConfig, StatsReport};
use crate::vectorstore::VectorDataset;

/// Version tag written into every JSON report.
pub const REPORT_VERSION: &str = "incgraph-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Knn,
    IncKnn,
    Epsilon,
    IncKnnMst,
    KnnMst,
}

impl Method {
    pub fn uses_k(self) -> bool {
        self != Method::Epsilon
    }

    pub fn is_incremental(self) -> bool {
        matches!(self, Method::IncKnn | Method::IncKnnMst)
    }

    fn as_str(self) -> &'static str {
        match self {
            Method::Knn => "knn",
            Method::IncKnn => "inc_knn",
            Method::Epsilon => "epsilon",
            Method::IncKnnMst => "inc_knn_mst",
            Method::KnnMst => "knn_mst",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "knn" => Method::Knn,
            "inc_knn" => Method::IncKnn,
            "epsilon" => Method::Epsilon,
            "inc_knn_mst" => Method::IncKnnMst,
            "knn_mst" => Method::KnnMst,
            other => return Err(Error::param(format!("unknown method '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Dataset path(s), echoed into the report.
    #[serde(default)]
    pub inputs: Vec<String>,
    pub method: Method,
    pub k: Option<usize>,
    pub epsilon: Option<f64>,
    pub metric: Metric,
    pub affinity: AffinityKind,
    pub assigner: Assigner,
    pub clusters: usize,
    pub repeats: usize,
    pub base_seed: u64,
    pub beta: f64,
    /// Attach graph statistics of the first run's graph.
    #[serde(default)]
    pub compute_stats: bool,
    /// Record wall times per stage. Off by default so reports are reproducible byte for byte.
    #[serde(default)]
    pub record_timings: bool,
}

impl ExperimentConfig {
    pub fn new(method: Method, clusters: usize) -> Self {
        ExperimentConfig {
            inputs: Vec::new(),
            method,
            k: None,
            epsilon: None,
            metric: Metric::Cosine,
            affinity: AffinityKind::Connection,
            assigner: Assigner::Kmeans,
            clusters,
            repeats: 1,
            base_seed: 0,
            beta: 1.0,
            compute_stats: false,
            record_timings: false,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn validate(&self) -> Result<()> {
        match (self.method.uses_k(), self.k, self.epsilon) {
            (true, Some(0), _) => return Err(Error::param("k must be at least 1")),
            (true, Some(_), None) => {}
            (false, None, Some(e)) if !(e.is_finite() && e > 0.0) => {
                return Err(Error::param(format!("epsilon must be positive and finite, got {e}")))
            }
            (false, None, Some(_)) => {}
            (true, _, _) => return Err(Error::param(format!("method {} needs k and no epsilon", self.method))),
            (false, _, _) => return Err(Error::param("method epsilon needs epsilon and no k")),
        }
        if self.repeats == 0 {
            return Err(Error::param("repeats must be at least 1"));
        }
        if self.clusters == 0 {
            return Err(Error::param("cluster count must be at least 1"));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::param(format!("beta must be a nonnegative number, got {}", self.beta)));
        }
        if let AffinityKind::Gaussian { t } = self.affinity {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::param(format!("kernel width t must be positive, got {t}")));
            }
        }
        Ok(())
    }

    /// Seed of the node ordering (and k-means restarts) for run `r`.
    pub fn run_seed(&self, r: usize) -> u64 {
        derive_seed(self.base_seed, r as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub build_ms: f64,
    pub embed_ms: f64,
    pub assign_ms: f64,
    pub score_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub scores: ClusterScores,
    pub components: ComponentReport,
    /// Set when the run could not be handled by the regular path, e.g. a
    /// disconnected graph scored through the component-blocked embedding.
    pub diagnostic: Option<String>,
    /// The assigner could not split the embedding.
    pub degenerate_assignment: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timings: Option<StageTimings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub n: usize,
    pub dim: usize,
    pub classes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub v_measure: f64,
    pub homogeneity: f64,
    pub completeness: f64,
}

impl ScoreSummary {
    fn mean(runs: &[ClusterScores]) -> Self {
        let n = runs.len() as f64;
        ScoreSummary {
            v_measure: runs.iter().map(|s| s.v_measure).sum::<f64>() / n,
            homogeneity: runs.iter().map(|s| s.homogeneity).sum::<f64>() / n,
            completeness: runs.iter().map(|s| s.completeness).sum::<f64>() / n,
        }
    }

    /// Population standard deviation.
    fn std(runs: &[ClusterScores], mean: &ScoreSummary) -> Self {
        let n = runs.len() as f64;
        let sd = |f: fn(&ClusterScores) -> f64, m: f64| (runs.iter().map(|s| (f(s) - m).powi(2)).sum::<f64>() / n).sqrt();
        ScoreSummary {
            v_measure: sd(|s| s.v_measure, mean.v_measure),
            homogeneity: sd(|s| s.homogeneity, mean.homogeneity),
            completeness: sd(|s| s.completeness, mean.completeness),
        }
    }
}

/// Result of one experiment, a baseline, or a merge of several reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: String,
    /// `knn`, `inc_knn`, ..., `kmeans_hd`, or `merged`.
    pub method: String,
    pub config: Option<ExperimentConfig>,
    pub dataset: DatasetInfo,
    pub runs: Vec<RunRecord>,
    pub mean: ScoreSummary,
    /// Present iff more than one run (or partition) contributed.
    pub std: Option<ScoreSummary>,
    pub stats: Option<StatsReport>,
    /// Dataset names of the reports averaged into this one.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub merged_from: Option<Vec<String>>,
}

impl RunReport {
    fn assemble(method: String, config: Option<ExperimentConfig>, dataset: DatasetInfo, runs: Vec<RunRecord>) -> Self {
        let s: Vec<ClusterScores> = runs.iter().map(|r| r.scores).collect();
        let mean = ScoreSummary::mean(&s);
        let std = (s.len() > 1).then(|| ScoreSummary::std(&s, &mean));
        RunReport {
            format_version: REPORT_VERSION.to_string(),
            method,
            config,
            dataset,
            runs,
            mean,
            std,
            stats: None,
            merged_from: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: RunReport = serde_json::from_str(text).map_err(|e| Error::format("run report", e.to_string()))?;
        check_version(&report.format_version)?;
        Ok(report)
    }
}

fn check_version(v: &str) -> Result<()> {
    if v != REPORT_VERSION {
        return Err(Error::format(
            "run report",
            format!("unsupported format version '{v}', expected '{REPORT_VERSION}'"),
        ));
    }
    Ok(())
}

fn dataset_info(data: &VectorDataset) -> Result<(DatasetInfo, &[usize])> {
    let labels = data
        .labels()
        .ok_or_else(|| Error::Validation("labels are required for evaluation".into()))?;
    Ok((
        DatasetInfo {
            name: data.name.clone(),
            n: data.len(),
            dim: data.dim(),
            classes: labels.num_classes(),
        },
        labels.ids(),
    ))
}

/// Builds the graph for run `r` of `config`.
pub fn build_graph(config: &ExperimentConfig, data: &VectorDataset, run: usize) -> Result<NeighborGraph> {
    let metric = config.metric;
    let k = || config.k.ok_or_else(|| Error::param("k is required"));
    let ordering = || NodeOrdering::random(data.len(), config.run_seed(run));
    match config.method {
        Method::Knn => build_knn_standard(data, k()?, metric),
        Method::KnnMst => augment_mst(&build_knn_standard(data, k()?, metric)?, data, metric),
        Method::IncKnn => build_knn_incremental(data, k()?, metric, &ordering()),
        Method::IncKnnMst => augment_mst(&build_knn_incremental(data, k()?, metric, &ordering())?, data, metric),
        Method::Epsilon => {
            let eps = config.epsilon.ok_or_else(|| Error::param("epsilon is required"))?;
            build_epsilon(data, eps, metric)
        }
    }
}

/// Spectral embedding of a graph with `dim` coordinates. Disconnected graphs
/// fall back to the component-blocked embedding; the second value then holds
/// a diagnostic.
pub fn embed_graph(
    graph: &NeighborGraph,
    data: &VectorDataset,
    affinity: AffinityKind,
    dim: usize,
) -> Result<(SpectralEmbedding, Option<String>)> {
    let aff = match affinity {
        AffinityKind::Connection => affinity_connection(graph),
        AffinityKind::Gaussian { t } => affinity_gaussian(graph, data, t)?,
    };
    match laplacian_eigenmaps(&aff, dim) {
        Ok(e) => Ok((e, None)),
        Err(Error::Disconnected { components }) => {
            let e = component_blocked_embedding(&aff, dim)?;
            Ok((
                e,
                Some(format!(
                    "graph has {components} connected components; scored with the component-blocked embedding"
                )),
            ))
        }
        Err(e) => Err(e),
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

fn run_once(config: &ExperimentConfig, data: &VectorDataset, truth: &[usize], run: usize) -> Result<(RunRecord, NeighborGraph)> {
    let t0 = Instant::now();
    let graph = build_graph(config, data, run)?;
    let components = connected_components(&graph);
    let build_ms = ms(t0);

    let t1 = Instant::now();
    let (embedding, diagnostic) = embed_graph(&graph, data, config.affinity, config.clusters)?;
    let embed_ms = ms(t1);

    let t2 = Instant::now();
    let assignment = match config.assigner {
        Assigner::Qr => qr_assign(&embedding, config.clusters)?,
        Assigner::Kmeans => kmeans_assign(&embedding, config.clusters, derive_seed(config.run_seed(run), 1))?,
    };
    let assign_ms = ms(t2);

    let t3 = Instant::now();
    let scores = scores(truth, &assignment.labels, config.beta)?;
    let score_ms = ms(t3);

    if let Some(d) = &diagnostic {
        log::info!("run {run}: {d}");
    }
    let record = RunRecord {
        run,
        seed: config.run_seed(run),
        scores,
        components,
        diagnostic,
        degenerate_assignment: assignment.degenerate,
        timings: config.record_timings.then_some(StageTimings {
            build_ms,
            embed_ms,
            assign_ms,
            score_ms,
        }),
    };
    Ok((record, graph))
}

/// Runs `config.repeats` independent build/embed/assign/score passes. Runs of
/// incremental methods each use a fresh node ordering.
pub fn run_experiment(config: &ExperimentConfig, data: &VectorDataset) -> Result<RunReport> {
    config.validate()?;
    let (info, truth) = dataset_info(data)?;
    if config.clusters > data.len().saturating_sub(1) {
        return Err(Error::param(format!(
            "{} clusters need at least {} points",
            config.clusters,
            config.clusters + 1
        )));
    }
    let results: Vec<(RunRecord, NeighborGraph)> = (0..config.repeats)
        .into_par_iter()
        .map(|r| run_once(config, data, truth, r))
        .collect::<Result<_>>()?;
    let stats = if config.compute_stats {
        let mc = McConfig {
            seed: derive_seed(config.base_seed, u64::MAX),
            ..McConfig::default()
        };
        Some(estimate_stats_mc(&results[0].1, Some(truth), &mc)?)
    } else {
        None
    };
    let runs = results.into_iter().map(|(r, _)| r).collect();
    let mut report = RunReport::assemble(config.method.to_string(), Some(config.clone()), info, runs);
    report.stats = stats;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: usize,
    pub report: RunReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub format_version: String,
    pub method: Method,
    pub points: Vec<SweepPoint>,
}

impl SweepReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// One experiment per k; `config.k` is overridden.
pub fn sweep_k(config: &ExperimentConfig, data: &VectorDataset, k_values: &[usize]) -> Result<SweepReport> {
    if k_values.is_empty() {
        return Err(Error::param("k list is empty"));
    }
    if !matches!(config.method, Method::Knn | Method::IncKnn) {
        return Err(Error::param(format!("sweeps need method knn or inc_knn, got {}", config.method)));
    }
    let points = k_values
        .par_iter()
        .map(|&k| {
            let cfg = ExperimentConfig {
                k: Some(k),
                epsilon: None,
                ..config.clone()
            };
            run_experiment(&cfg, data).map(|report| SweepPoint { k, report })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport {
        format_version: REPORT_VERSION.to_string(),
        method: config.method,
        points,
    })
}

/// k-means directly on the input vectors, scored like the spectral runs.
pub fn baseline_kmeans_hd(data: &VectorDataset, clusters: usize, seed: u64, beta: f64) -> Result<RunReport> {
    let (info, truth) = dataset_info(data)?;
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::param(format!("beta must be a nonnegative number, got {beta}")));
    }
    let points: Vec<f64> = data.values().iter().map(|&x| x as f64).collect();
    let result = kmeans(&points, data.dim(), clusters, seed, KMeansConfig::default())?;
    let record = RunRecord {
        run: 0,
        seed,
        scores: scores(truth, &result.labels, beta)?,
        components: ComponentReport {
            num_components: 1,
            max_component_size: data.len(),
            graph_edges: 0,
            digraph_edges: 0,
        },
        diagnostic: None,
        degenerate_assignment: result.degenerate,
        timings: None,
    };
    Ok(RunReport::assemble("kmeans_hd".into(), None, info, vec![record]))
}

/// Averages reports of different partitions of one source. Each report
/// counts once regardless of its size or number of runs.
pub fn merge_reports(reports: &[RunReport]) -> Result<RunReport> {
    let first = reports.first().ok_or_else(|| Error::param("nothing to merge"))?;
    for r in reports {
        check_version(&r.format_version)?;
        if r.method != first.method {
            return Err(Error::param(format!(
                "cannot merge reports of methods '{}' and '{}'",
                first.method, r.method
            )));
        }
    }
    let means: Vec<ClusterScores> = reports
        .iter()
        .map(|r| ClusterScores {
            v_measure: r.mean.v_measure,
            homogeneity: r.mean.homogeneity,
            completeness: r.mean.completeness,
        })
        .collect();
    let mean = ScoreSummary::mean(&means);
    let std = reports
        .iter()
        .map(|r| r.std)
        .collect::<Option<Vec<_>>>()
        .map(|stds| {
            let s: Vec<ClusterScores> = stds
                .iter()
                .map(|s| ClusterScores {
                    v_measure: s.v_measure,
                    homogeneity: s.homogeneity,
                    completeness: s.completeness,
                })
                .collect();
            ScoreSummary::mean(&s)
        });
    let same_config = reports.iter().all(|r| r.config.as_ref().map(strip_inputs) == first.config.as_ref().map(strip_inputs));
    Ok(RunReport {
        format_version: REPORT_VERSION.to_string(),
        method: first.method.clone(),
        config: if same_config { first.config.clone() } else { None },
        dataset: DatasetInfo {
            name: "merged".into(),
            n: reports.iter().map(|r| r.dataset.n).sum(),
            dim: first.dataset.dim,
            classes: reports.iter().map(|r| r.dataset.classes).max().unwrap_or(0),
        },
        runs: Vec::new(),
        mean,
        std,
        stats: None,
        merged_from: Some(reports.iter().map(|r| r.dataset.name.clone()).collect()),
    })
}

fn strip_inputs(c: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        inputs: Vec::new(),
        ..c.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentMethod {
    Knn,
    IncKnn,
    Epsilon,
}

impl FromStr for ComponentMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "knn" => ComponentMethod::Knn,
            "inc_knn" => ComponentMethod::IncKnn,
            "epsilon" => ComponentMethod::Epsilon,
            other => return Err(Error::param(format!("components supports knn, inc_knn or epsilon, not '{other}'"))),
        })
    }
}

/// One row of a component table. Exactly one of `k` and `epsilon` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentRow {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon: Option<f64>,
    pub num_components: usize,
    pub max_component_size: usize,
    pub graph_edges: usize,
    pub digraph_edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentTable {
    pub format_version: String,
    pub method: ComponentMethod,
    pub metric: Metric,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon0: Option<f64>,
    pub rows: Vec<ComponentRow>,
}

impl ComponentTable {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Tab-separated rows with a header line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("parameter\tcomponents\tmax_component\tgraph_edges\tdigraph_edges\n");
        for r in &self.rows {
            let p = match (r.k, r.epsilon) {
                (Some(k), _) => k.to_string(),
                (_, Some(e)) => format!("{e:.6}"),
                _ => String::new(),
            };
            out.push_str(&format!(
                "{p}\t{}\t{}\t{}\t{}\n",
                r.num_components, r.max_component_size, r.graph_edges, r.digraph_edges
            ));
        }
        out
    }
}

fn row(k: Option<usize>, epsilon: Option<f64>, c: ComponentReport) -> ComponentRow {
    ComponentRow {
        k,
        epsilon,
        num_components: c.num_components,
        max_component_size: c.max_component_size,
        graph_edges: c.graph_edges,
        digraph_edges: c.digraph_edges,
    }
}

/// Component table over k values (knn, inc_knn) or epsilon values.
/// `seed` fixes the ordering of incremental graphs.
pub fn report_components(
    data: &VectorDataset,
    method: ComponentMethod,
    metric: Metric,
    values: &[f64],
    seed: u64,
) -> Result<ComponentTable> {
    let rows = values
        .par_iter()
        .map(|&v| -> Result<ComponentRow> {
            match method {
                ComponentMethod::Epsilon => {
                    let g = build_epsilon(data, v, metric)?;
                    Ok(row(None, Some(v), connected_components(&g)))
                }
                _ => {
                    if !(v >= 1.0 && v.fract() == 0.0) {
                        return Err(Error::param(format!("k must be a positive integer, got {v}")));
                    }
                    let k = v as usize;
                    let g = if method == ComponentMethod::Knn {
                        build_knn_standard(data, k, metric)?
                    } else {
                        build_knn_incremental(data, k, metric, &NodeOrdering::random(data.len(), seed))?
                    };
                    Ok(row(Some(k), None, connected_components(&g)))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComponentTable {
        format_version: REPORT_VERSION.to_string(),
        method,
        metric,
        epsilon0: None,
        rows,
    })
}

/// Relative offsets of the epsilon table around the connectivity threshold.
pub const EPSILON_OFFSETS: [f64; 5] = [-0.10, -0.05, 0.0, 0.05, 0.10];

/// Epsilon component table at `eps0 * (1 + offset)` for [`EPSILON_OFFSETS`].
pub fn epsilon_table(data: &VectorDataset, metric: Metric) -> Result<ComponentTable> {
    let eps0 = find_epsilon0(data, metric, DEFAULT_EPSILON_TOL)?;
    let values: Vec<f64> = EPSILON_OFFSETS.iter().map(|o| eps0 * (1.0 + o)).collect();
    let mut table = report_components(data, ComponentMethod::Epsilon, metric, &values, 0)?;
    table.epsilon0 = Some(eps0);
    Ok(table)
}
