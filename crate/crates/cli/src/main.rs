use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use incgraph::construction::DEFAULT_EPSILON_TOL;
use incgraph::pipeline::{
    baseline_kmeans_hd, build_graph, embed_graph, epsilon_table, merge_reports, report_components, run_experiment,
    sweep_k, ComponentMethod, ExperimentConfig, Method, RunReport, REPORT_VERSION,
};
use incgraph::spectral::{AffinityKind, Assigner};
use incgraph::stats::{doc_stats, estimate_stats_mc, sample_stats, McConfig};
use incgraph::synth::{gaussian_blobs, BlobConfig};
use incgraph::vectorstore::EmbeddingFormat;
use incgraph::{
    connected_components, find_epsilon0, read_embeddings, read_labels, write_embeddings, write_labels, Error, ErrorKind,
    Metric, NeighborGraph, VectorDataset,
};

#[derive(Parser)]
#[command(name = "incgraph", version, about = "Neighborhood graphs and spectral clustering experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Component table over k or epsilon values.
    Components(ComponentsArgs),
    /// Smallest epsilon giving a connected epsilon-graph.
    Epsilon0(Epsilon0Args),
    /// Build one graph and write its edge list.
    Build(BuildArgs),
    /// Build, embed, assign and score; writes a run report.
    Cluster(ClusterArgs),
    /// One run report per k.
    Sweep(SweepArgs),
    /// k-means on the raw vectors.
    Baseline(BaselineArgs),
    /// Graph statistics, exact or sampled.
    Stats(StatsArgs),
    /// Average run reports of several partitions of one source.
    Merge(MergeArgs),
    /// Write a labelled Gaussian-blob dataset.
    Synth(SynthArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Embeddings, EMB1 binary or TSV (by extension).
    #[arg(long)]
    input: PathBuf,
    /// Class labels, one per line.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value = "cosine")]
    metric: Metric,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long, default_value = "inc_knn")]
    method: Method,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum AffinityArg {
    Connection,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum AssignArg {
    Kmeans,
    Qr,
}

#[derive(Args)]
struct SpectralArgs {
    #[arg(long, value_enum, default_value = "connection")]
    affinity: AffinityArg,
    /// Gaussian kernel width; required with `--affinity gaussian`.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, value_enum, default_value = "kmeans")]
    assign: AssignArg,
    #[arg(long)]
    clusters: usize,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Attach graph statistics of the first run's graph.
    #[arg(long)]
    stats: bool,
    /// Record per-stage wall times (reports are then no longer reproducible).
    #[arg(long)]
    timings: bool,
    /// Raw documents, one per line, for the document statistics.
    #[arg(long)]
    texts: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Json,
    Tsv,
}

#[derive(Args)]
struct ComponentsArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "knn")]
    method: ComponentMethod,
    /// Comma-separated k values.
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    /// Comma-separated epsilon values; omitted means epsilon0 plus or minus 5% and 10%.
    #[arg(long, value_delimiter = ',')]
    epsilon: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    format: TableFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Epsilon0Args {
    #[command(flatten)]
    data: DataArgs,
    /// Relative tolerance of the bisection.
    #[arg(long, default_value_t = DEFAULT_EPSILON_TOL)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    graph: GraphArgs,
    /// Edge list destination.
    #[arg(long)]
    out: PathBuf,
    /// Also write the spectral embedding (EMB1 plus eigenvalue sidecar).
    #[arg(long, requires = "clusters")]
    embedding_out: Option<PathBuf>,
    /// Embedding dimension for `--embedding-out`.
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long, value_enum, default_value = "connection")]
    affinity: AffinityArg,
    #[arg(long)]
    t: Option<f64>,
}

#[derive(Args)]
struct ClusterArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    spectral: SpectralArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "inc_knn")]
    method: Method,
    /// Comma-separated k values.
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    spectral: SpectralArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    clusters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    graph: GraphArgs,
    /// Read the graph from an edge list instead of building it.
    #[arg(long)]
    graph_file: Option<PathBuf>,
    /// Target 95% half-width of sampled statistics.
    #[arg(long, default_value_t = McConfig::default().target_halfwidth)]
    target_halfwidth: f64,
    /// Sample even when the graph is small enough for exact computation.
    #[arg(long)]
    sample: bool,
    #[arg(long)]
    texts: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MergeArgs {
    /// Run reports to average.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 600)]
    n: usize,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 3)]
    centers: usize,
    #[arg(long, default_value_t = 6.0)]
    separation: f64,
    #[arg(long, default_value_t = 0.0)]
    outliers: f64,
    #[arg(long)]
    intrinsic_dim: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Embedding destination; labels go next to it with a `.labels` suffix.
    #[arg(long)]
    out: PathBuf,
}

fn load(args: &DataArgs) -> Result<VectorDataset, Error> {
    let mut data = read_embeddings(&args.input, EmbeddingFormat::from_path(&args.input))?;
    if let Some(path) = &args.labels {
        data = data.with_labels(read_labels(path)?)?;
    }
    Ok(data)
}

fn read_texts(path: &Path, n: usize) -> Result<Vec<String>, Error> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let lines: Vec<String> = text.lines().map(str::to_owned).collect();
    if lines.len() != n {
        return Err(Error::Validation(format!(
            "{} has {} documents for {n} vectors",
            path.display(),
            lines.len()
        )));
    }
    Ok(lines)
}

fn emit(out: Option<&Path>, body: &str) -> Result<(), Error> {
    let mut body = body.to_owned();
    if !body.ends_with('\n') {
        body.push('\n');
    }
    match out {
        Some(p) => fs::write(p, body).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn affinity(kind: AffinityArg, t: Option<f64>) -> Result<AffinityKind, Error> {
    match (kind, t) {
        (AffinityArg::Connection, None) => Ok(AffinityKind::Connection),
        (AffinityArg::Connection, Some(_)) => Err(Error::Parameter("--t only applies to --affinity gaussian".into())),
        (AffinityArg::Gaussian, Some(t)) => Ok(AffinityKind::Gaussian { t }),
        (AffinityArg::Gaussian, None) => Err(Error::Parameter("--affinity gaussian needs --t".into())),
    }
}

fn experiment(
    data: &DataArgs,
    method: Method,
    k: Option<usize>,
    epsilon: Option<f64>,
    seed: u64,
    s: &SpectralArgs,
) -> Result<ExperimentConfig, Error> {
    let config = ExperimentConfig {
        inputs: vec![data.input.display().to_string()],
        method,
        k,
        epsilon,
        metric: data.metric,
        affinity: affinity(s.affinity, s.t)?,
        assigner: match s.assign {
            AssignArg::Kmeans => Assigner::Kmeans,
            AssignArg::Qr => Assigner::Qr,
        },
        clusters: s.clusters,
        repeats: s.repeats,
        base_seed: seed,
        beta: s.beta,
        compute_stats: s.stats || s.texts.is_some(),
        record_timings: s.timings,
    };
    config.validate()?;
    Ok(config)
}

fn attach_documents(report: &mut RunReport, texts: Option<&Path>) -> Result<(), Error> {
    if let (Some(path), Some(stats)) = (texts, report.stats.as_mut()) {
        stats.documents = Some(doc_stats(&read_texts(path, report.dataset.n)?));
    }
    Ok(())
}

fn graph_config(data: &DataArgs, g: &GraphArgs) -> Result<ExperimentConfig, Error> {
    let config = ExperimentConfig {
        inputs: vec![data.input.display().to_string()],
        k: g.k,
        epsilon: g.epsilon,
        metric: data.metric,
        base_seed: g.seed,
        ..ExperimentConfig::new(g.method, 1)
    };
    config.validate()?;
    Ok(config)
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Components(a) => {
            let data = load(&a.data)?;
            let table = match a.method {
                ComponentMethod::Epsilon => {
                    if !a.k.is_empty() {
                        return Err(Error::Parameter("method epsilon takes --epsilon, not --k".into()));
                    }
                    if a.epsilon.is_empty() {
                        epsilon_table(&data, a.data.metric)?
                    } else {
                        report_components(&data, a.method, a.data.metric, &a.epsilon, a.seed)?
                    }
                }
                _ => {
                    if a.k.is_empty() || !a.epsilon.is_empty() {
                        return Err(Error::Parameter(format!("method {:?} needs --k and no --epsilon", a.method)));
                    }
                    let ks: Vec<f64> = a.k.iter().map(|&k| k as f64).collect();
                    report_components(&data, a.method, a.data.metric, &ks, a.seed)?
                }
            };
            let body = match a.format {
                TableFormat::Json => table.to_json(),
                TableFormat::Tsv => table.to_tsv(),
            };
            emit(a.out.as_deref(), &body)
        }
        Command::Epsilon0(a) => {
            let data = load(&a.data)?;
            let eps0 = find_epsilon0(&data, a.data.metric, a.tol)?;
            let body = json!({
                "format_version": REPORT_VERSION,
                "metric": a.data.metric,
                "tol": a.tol,
                "epsilon0": eps0,
            });
            emit(a.out.as_deref(), &serde_json::to_string_pretty(&body).expect("json"))
        }
        Command::Build(a) => {
            let data = load(&a.data)?;
            let config = graph_config(&a.data, &a.graph)?;
            let kind = affinity(a.affinity, a.t)?;
            let graph = build_graph(&config, &data, 0)?;
            graph.write_edge_list(&a.out)?;
            let mut diagnostic = None;
            if let (Some(path), Some(m)) = (&a.embedding_out, a.clusters) {
                let (embedding, diag) = embed_graph(&graph, &data, kind, m)?;
                embedding.export(path)?;
                diagnostic = diag;
            }
            let summary = json!({
                "format_version": REPORT_VERSION,
                "method": config.method,
                "nodes": graph.n(),
                "directed_edges": graph.num_edges(),
                "components": connected_components(&graph),
                "diagnostic": diagnostic,
            });
            emit(None, &serde_json::to_string_pretty(&summary).expect("json"))
        }
        Command::Cluster(a) => {
            let data = load(&a.data)?;
            let config = experiment(&a.data, a.graph.method, a.graph.k, a.graph.epsilon, a.graph.seed, &a.spectral)?;
            let mut report = run_experiment(&config, &data)?;
            attach_documents(&mut report, a.spectral.texts.as_deref())?;
            emit(a.out.as_deref(), &report.to_json())
        }
        Command::Sweep(a) => {
            let data = load(&a.data)?;
            let config = experiment(&a.data, a.method, Some(a.k[0]), None, a.seed, &a.spectral)?;
            let mut report = sweep_k(&config, &data, &a.k)?;
            for p in &mut report.points {
                attach_documents(&mut p.report, a.spectral.texts.as_deref())?;
            }
            emit(a.out.as_deref(), &report.to_json())
        }
        Command::Baseline(a) => {
            let data = load(&a.data)?;
            let report = baseline_kmeans_hd(&data, a.clusters, a.seed, a.beta)?;
            emit(a.out.as_deref(), &report.to_json())
        }
        Command::Stats(a) => {
            let data = load(&a.data)?;
            let graph = match &a.graph_file {
                Some(p) => {
                    let g = NeighborGraph::read_edge_list(p)?;
                    if g.n() != data.len() {
                        return Err(Error::Validation(format!(
                            "graph has {} nodes, dataset has {}",
                            g.n(),
                            data.len()
                        )));
                    }
                    g
                }
                None => build_graph(&graph_config(&a.data, &a.graph)?, &data, 0)?,
            };
            if !(a.target_halfwidth.is_finite() && a.target_halfwidth > 0.0) {
                return Err(Error::Parameter("--target-halfwidth must be positive".into()));
            }
            let mc = McConfig {
                seed: a.graph.seed,
                target_halfwidth: a.target_halfwidth,
                ..McConfig::default()
            };
            let labels = data.labels().map(|l| l.ids());
            let mut report = if a.sample {
                sample_stats(&graph, labels, &mc)?
            } else {
                estimate_stats_mc(&graph, labels, &mc)?
            };
            if let Some(p) = &a.texts {
                report.documents = Some(doc_stats(&read_texts(p, data.len())?));
            }
            let body = json!({
                "format_version": REPORT_VERSION,
                "stats": report,
            });
            emit(a.out.as_deref(), &serde_json::to_string_pretty(&body).expect("json"))
        }
        Command::Merge(a) => {
            let reports = a
                .reports
                .iter()
                .map(|p| {
                    let text = fs::read_to_string(p).map_err(|source| Error::Io {
                        path: p.clone(),
                        source,
                    })?;
                    RunReport::from_json(&text)
                })
                .collect::<Result<Vec<_>, Error>>()?;
            emit(a.out.as_deref(), &merge_reports(&reports)?.to_json())
        }
        Command::Synth(a) => {
            let data = gaussian_blobs(&BlobConfig {
                n: a.n,
                dim: a.dim,
                centers: a.centers,
                separation: a.separation,
                outlier_fraction: a.outliers,
                intrinsic_dim: a.intrinsic_dim,
                seed: a.seed,
            })?;
            write_embeddings(&data, &a.out)?;
            let mut labels_path = a.out.clone().into_os_string();
            labels_path.push(".labels");
            write_labels(data.labels().expect("synthetic data is labelled"), PathBuf::from(labels_path))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Parameter => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numerical => 4,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::debug!("{e:?}");
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
