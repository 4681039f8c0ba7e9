//! Batch front end: `ingest`, `weights`, `evaluate`, `predict`, `report`.
//!
//! Settings come from an optional TOML file (`--config`) overlaid with
//! command-line flags. Machine-readable output goes to stdout or to files in
//! `--out`; progress and timings go to stderr.
//!
//! Exit codes: 0 success, 1 other failure, 2 unreadable input,
//! 3 weights did not converge, 4 invalid query hyperedge.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::{Deserialize, Serialize};

use crate::bipartite::{parse_bipartite_edges, Delimiter, Ingested, Interner, Schema, Side};
use crate::error::{Error, Result};
use crate::evaluation::{
    grid_search, GridSpec, Method, Protocol, SplitSpec, Task, DEFAULT_EPSILONS, DEFAULT_HOLDOUT, DEFAULT_K_MAX,
};
use crate::geometry::{Geometry, GeometryConfig, HPolicy, NeighborhoodRecord, Query, SizePolicy};
use crate::hypergraph::{induce_hypergraph, Hypergraph, IncidenceIndex, VertexId};
use crate::observation::ObservationMap;
use crate::predictors::{
    embed, knn_shells, predict_label_embedded, predict_weight_embedded, resolve_label, FeatureSpace,
};
use crate::report::{write_grid_csv, write_predictions_csv, DatasetStats, EvaluationReport, WeightSummary};
use crate::weighting::{
    bucketize_labels, goodness_weights, write_weights_csv, FairnessGoodness, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_UNREADABLE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_BAD_QUERY: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Unreadable { .. } | Error::NoEdges => EXIT_UNREADABLE,
        Error::UnknownVertex(_) | Error::EmptyQuery => EXIT_BAD_QUERY,
        _ => EXIT_FAILURE,
    }
}

/// All settings of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    /// A single character, `\t`, or `whitespace`.
    pub delimiter: String,
    /// Zero-based columns of u, v and rating.
    pub columns: [usize; 3],
    pub vertex_side: Side,
    pub task: Task,
    pub method: Method,
    /// Number of labels for the label task; embedding dimension for
    /// embedded weight prediction.
    pub q: u32,
    pub k_max: usize,
    pub epsilons: Vec<f64>,
    /// Fixed refinement radius; unset means the neighborhood's standard
    /// deviation.
    pub h: Option<f64>,
    pub holdout: f64,
    pub seed: u64,
    pub protocol: Protocol,
    pub tolerance: f64,
    pub max_iter: usize,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    /// `k` for `predict`.
    pub k: usize,
    /// Size-control constant for `predict`; unset means unbounded.
    pub epsilon: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            delimiter: "\\t".into(),
            columns: [0, 1, 2],
            vertex_side: Side::U,
            task: Task::Weight,
            method: Method::Modified,
            q: 2,
            k_max: DEFAULT_K_MAX,
            epsilons: DEFAULT_EPSILONS.to_vec(),
            h: None,
            holdout: DEFAULT_HOLDOUT,
            seed: 0,
            protocol: Protocol::Paper,
            tolerance: DEFAULT_TOLERANCE,
            max_iter: DEFAULT_MAX_ITER,
            workers: None,
            out: None,
            k: 1,
            epsilon: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Unreadable { path: path.to_owned(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn schema(&self) -> Result<Schema> {
        let [u_col, v_col, rating_col] = self.columns;
        Ok(Schema { delimiter: self.delimiter.parse::<Delimiter>()?, u_col, v_col, rating_col, ..Schema::default() })
    }

    pub fn h_policy(&self) -> Result<HPolicy> {
        match self.h {
            None => Ok(HPolicy::StdDevOfNeighborhood),
            Some(h) if h > 0.0 => Ok(HPolicy::Fixed(h)),
            Some(h) => Err(Error::Config(format!("h must be positive, got {h}"))),
        }
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        Ok(GridSpec {
            task: self.task,
            method: self.method,
            k_max: self.k_max,
            epsilons: self.epsilons.clone(),
            h_policy: self.h_policy()?,
            feature_q: self.q,
            split: SplitSpec { holdout_fraction: self.holdout, seed: self.seed },
            protocol: self.protocol,
        })
    }

    fn input(&self) -> Result<&Path> {
        self.input.as_deref().ok_or_else(|| Error::Config("no input file given".into()))
    }
}

/// A loaded edge list and its induced hypergraph, oriented by the
/// configured vertex side.
pub struct Dataset {
    pub ingested: Ingested,
    pub hypergraph: Hypergraph,
    pub index: IncidenceIndex,
}

impl Dataset {
    pub fn load(config: &RunConfig) -> Result<Self> {
        let path = config.input()?;
        let file = File::open(path).map_err(|source| Error::Unreadable { path: path.to_owned(), source })?;
        let mut ingested = parse_bipartite_edges(BufReader::new(file), &config.schema()?)?;
        ingested.graph = ingested.graph.oriented(config.vertex_side);
        Ok(Self::from_ingested(ingested))
    }

    pub fn from_ingested(ingested: Ingested) -> Self {
        let hypergraph = induce_hypergraph(&ingested.graph);
        let index = IncidenceIndex::build(&hypergraph);
        Dataset { ingested, hypergraph, index }
    }

    pub fn vertex_names(&self) -> &Interner {
        &self.ingested.graph.u_ids
    }

    pub fn item_names(&self) -> &Interner {
        &self.ingested.graph.v_ids
    }

    pub fn weights(&self, config: &RunConfig) -> Result<(ObservationMap, FairnessGoodness)> {
        goodness_weights(&self.ingested.graph, &self.hypergraph, config.tolerance, config.max_iter)
    }

    /// The map the configured task predicts: weights, or their `q`-bucket
    /// labels.
    pub fn targets(&self, config: &RunConfig, weights: &ObservationMap) -> Result<ObservationMap> {
        match config.task {
            Task::Weight => Ok(weights.clone()),
            Task::Label => Ok(bucketize_labels(weights, config.q)?.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub ratings: usize,
    pub malformed: usize,
    pub duplicates: usize,
    #[serde(flatten)]
    pub stats: DatasetStats,
}

pub fn cmd_ingest(config: &RunConfig) -> Result<IngestSummary> {
    let data = Dataset::load(config)?;
    Ok(IngestSummary {
        ratings: data.ingested.graph.edges.len(),
        malformed: data.ingested.malformed,
        duplicates: data.ingested.duplicates,
        stats: DatasetStats::of(&data.hypergraph),
    })
}

#[derive(Debug, Clone)]
pub struct WeightsOutcome {
    pub weights: ObservationMap,
    pub summary: WeightSummary,
    /// `edge_id,source_item,weight` CSV.
    pub csv: Vec<u8>,
}

pub fn cmd_weights(config: &RunConfig) -> Result<WeightsOutcome> {
    let data = Dataset::load(config)?;
    let (weights, scores) = data.weights(config)?;
    let mut csv = Vec::new();
    write_weights_csv(&mut csv, &data.hypergraph, data.item_names().names(), &weights)?;
    Ok(WeightsOutcome { weights, summary: summarize(&scores), csv })
}

fn summarize(scores: &FairnessGoodness) -> WeightSummary {
    WeightSummary { iterations: scores.iterations, converged: scores.converged, final_delta: scores.final_delta }
}

/// Evaluation output: the report plus the CSV exports written next to it.
#[derive(Debug, Clone)]
pub struct EvaluateOutcome {
    pub report: EvaluationReport,
    pub grid_csv: Vec<u8>,
    pub predictions_csv: Vec<u8>,
}

pub fn cmd_evaluate(config: &RunConfig) -> Result<EvaluateOutcome> {
    let data = Dataset::load(config)?;
    let (weights, scores) = data.weights(config)?;
    evaluate_dataset(&data, &weights, &scores, config)
}

pub fn evaluate_dataset(
    data: &Dataset,
    weights: &ObservationMap,
    scores: &FairnessGoodness,
    config: &RunConfig,
) -> Result<EvaluateOutcome> {
    let spec = config.grid_spec()?;
    let targets = data.targets(config, weights)?;
    let result = grid_search(&data.hypergraph, &data.index, &targets, &spec)?;

    let mut grid_csv = Vec::new();
    write_grid_csv(&mut grid_csv, &result.rows)?;
    let mut predictions_csv = Vec::new();
    write_predictions_csv(&mut predictions_csv, &result.predictions, &result.best_test)?;

    let report = EvaluationReport {
        dataset: DatasetStats::of(&data.hypergraph),
        weights: summarize(scores),
        task: spec.task,
        method: spec.method,
        q: config.q,
        k_max: spec.k_max,
        epsilons: spec.epsilons.clone(),
        h_policy: spec.h_policy,
        split: spec.split,
        protocol: spec.protocol,
        train_size: result.train_size,
        test_size: result.test_size,
        grid: result.rows,
        best: result.best,
        best_test: result.best_test,
    };
    Ok(EvaluateOutcome { report, grid_csv, predictions_csv })
}

/// Prediction for an ad-hoc hyperedge, with its neighborhood diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub query: Vec<String>,
    pub task: Task,
    pub method: Method,
    pub k: usize,
    pub epsilon: Option<f64>,
    pub prediction: f64,
    pub size: usize,
    pub base: usize,
    pub avg: Option<f64>,
    pub h: Option<f64>,
    pub count: usize,
    /// Number of observed hyperedges the prediction averaged or voted over.
    pub neighbors: usize,
}

pub fn cmd_predict(config: &RunConfig, query: &[String]) -> Result<PredictionRecord> {
    let data = Dataset::load(config)?;
    let (weights, _) = data.weights(config)?;
    predict_query(&data, &weights, config, query)
}

pub fn predict_query(
    data: &Dataset,
    weights: &ObservationMap,
    config: &RunConfig,
    query: &[String],
) -> Result<PredictionRecord> {
    if query.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let names = data.vertex_names();
    let mut vertices: Vec<VertexId> =
        query.iter().map(|n| names.get(n).ok_or_else(|| Error::UnknownVertex(n.clone()))).collect::<Result<_>>()?;
    vertices.sort_unstable();
    vertices.dedup();

    let size_policy = match config.epsilon {
        Some(eps) => SizePolicy::epsilon(eps)?,
        None => SizePolicy::Infinite,
    };
    let geometry_config = GeometryConfig::new(size_policy, config.h_policy()?)?;
    let targets = data.targets(config, weights)?;
    let geometry = Geometry::new(&data.hypergraph, &data.index, &targets, geometry_config);
    let query_ref = Query::vertices(&vertices);

    let (prediction, record, neighbors): (f64, NeighborhoodRecord, usize) = match config.method {
        Method::Modified => {
            let record = geometry.record_for(query_ref);
            let shells = knn_shells(record.count, &targets, geometry.counts(), config.k)?;
            let members: Vec<_> = shells.member_ids().collect();
            let prediction = match config.task {
                Task::Weight => members.iter().map(|&e| targets.get(e).unwrap()).sum::<f64>() / members.len() as f64,
                Task::Label => {
                    let q = targets.q().unwrap() as usize;
                    resolve_label(&crate::geometry::label_tally(&members, &targets, q)) as f64
                }
            };
            (prediction, record, members.len())
        }
        Method::Embedded => {
            let labels = match config.task {
                Task::Weight => bucketize_labels(&targets, config.q)?.0,
                Task::Label => targets.clone(),
            };
            let space = FeatureSpace::from_geometry(&geometry, &labels)?;
            let (fv, record) = embed(&geometry, query_ref, &labels)?;
            let neighbors = space.neighbors(&fv, config.k)?.len();
            let prediction = match config.task {
                Task::Weight => predict_weight_embedded(&space, &fv, &targets, config.k)?,
                Task::Label => predict_label_embedded(&space, &fv, &labels, config.k)? as f64,
            };
            (prediction, record, neighbors)
        }
    };

    Ok(PredictionRecord {
        query: query.to_vec(),
        task: config.task,
        method: config.method,
        k: config.k,
        epsilon: size_policy.epsilon_value(),
        prediction,
        size: record.size,
        base: record.base.len(),
        avg: record.avg,
        h: record.h,
        count: record.count,
        neighbors,
    })
}

pub fn cmd_report(path: &Path) -> Result<String> {
    let file = File::open(path).map_err(|source| Error::Unreadable { path: path.to_owned(), source })?;
    let report: EvaluationReport = serde_json::from_reader(BufReader::new(file))?;
    Ok(report.render())
}

/// Runs `f` on a pool of `workers` threads (all cores when `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(pool.install(f))
}

/// Parses a size-control constant: a decimal or a fraction such as `5/3`.
pub fn parse_epsilon(s: &str) -> Result<f64> {
    let s = s.trim();
    let value = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| Error::Config(format!("bad epsilon {s:?}")))?;
            let den: f64 = den.trim().parse().map_err(|_| Error::Config(format!("bad epsilon {s:?}")))?;
            num / den
        }
        None => s.parse().map_err(|_| Error::Config(format!("bad epsilon {s:?}")))?,
    };
    SizePolicy::epsilon(value)?;
    Ok(value)
}

fn parse_epsilon_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(parse_epsilon).collect()
}

#[derive(Debug, Parser)]
#[command(name = "hyperknn", version, about = "Nearest-neighbor prediction of hyperedge weights and labels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse an edge list and print the induced hypergraph's shape.
    Ingest(RunArgs),
    /// Compute goodness-based hyperedge weights.
    Weights(RunArgs),
    /// Grid-search k and epsilon on a held-out split.
    Evaluate(RunArgs),
    /// Predict the weight or label of an ad-hoc hyperedge.
    Predict {
        #[command(flatten)]
        run: RunArgs,
        /// Vertex ids (as they appear in the input) of the query hyperedge.
        #[arg(value_delimiter = ',')]
        vertices: Vec<String>,
    },
    /// Summarize a JSON report written by `evaluate`.
    Report {
        /// Path to report.json.
        report: PathBuf,
    },
}

/// Flags shared by the data-processing subcommands. Each overrides the
/// matching key of the `--config` file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub delimiter: Option<String>,
    /// Zero-based `u,v,rating` columns.
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<usize>>,
    #[arg(long)]
    pub vertex_side: Option<String>,
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub q: Option<u32>,
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Comma-separated, fractions allowed: `5/3,4/3,1,2/3,1/2`.
    #[arg(long)]
    pub epsilons: Option<String>,
    /// Fixed refinement radius instead of the neighborhood standard deviation.
    #[arg(long)]
    pub h: Option<f64>,
    /// Held-out fraction.
    #[arg(long)]
    pub split: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Select (k, epsilon) on the held-out set.
    #[arg(long, conflicts_with = "validation")]
    pub paper_protocol: bool,
    /// Select (k, epsilon) on a validation split of the training set.
    #[arg(long)]
    pub validation: bool,
    #[arg(long, env = "HYPERKNN_WORKERS")]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `k` for predict.
    #[arg(long)]
    pub k: Option<usize>,
    /// Size-control constant for predict (omit for unbounded).
    #[arg(long)]
    pub epsilon: Option<String>,
}

impl RunArgs {
    /// The config file (if any) with these flags applied on top.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.input {
            c.input = Some(v.clone());
        }
        if let Some(v) = &self.delimiter {
            c.delimiter = v.clone();
        }
        if let Some(v) = &self.columns {
            c.columns = v
                .as_slice()
                .try_into()
                .map_err(|_| Error::Config(format!("--columns needs 3 values, got {}", v.len())))?;
        }
        if let Some(v) = &self.vertex_side {
            c.vertex_side = v.parse()?;
        }
        if let Some(v) = &self.task {
            c.task = v.parse()?;
        }
        if let Some(v) = &self.method {
            c.method = v.parse()?;
        }
        if let Some(v) = self.q {
            c.q = v;
        }
        if let Some(v) = self.k_max {
            c.k_max = v;
        }
        if let Some(v) = &self.epsilons {
            c.epsilons = parse_epsilon_list(v)?;
        }
        if let Some(v) = self.h {
            c.h = Some(v);
        }
        if let Some(v) = self.split {
            c.holdout = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if self.paper_protocol {
            c.protocol = Protocol::Paper;
        }
        if self.validation {
            c.protocol = Protocol::Validation;
        }
        if let Some(v) = self.workers {
            c.workers = Some(v);
        }
        if let Some(v) = &self.out {
            c.out = Some(v.clone());
        }
        if let Some(v) = self.k {
            c.k = v;
        }
        if let Some(v) = &self.epsilon {
            c.epsilon = match v.as_str() {
                "inf" | "infinite" => None,
                s => Some(parse_epsilon(s)?),
            };
        }
        Ok(c)
    }
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(File::create(dir.join(name))?);
    w.write_all(bytes)?;
    w.flush()?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Serialized `report.json` contents for an evaluation.
pub fn report_json(report: &EvaluationReport) -> Result<Vec<u8>> {
    to_json(report)
}

/// Executes a parsed command, writing machine output to `stdout`, and
/// returns the process exit code.
pub fn execute(cli: Cli, stdout: &mut dyn Write) -> i32 {
    match dispatch(cli, stdout) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<i32> {
    let started = Instant::now();
    match cli.command {
        Command::Ingest(args) => {
            let config = args.resolve()?;
            let summary = cmd_ingest(&config)?;
            let json = to_json(&summary)?;
            match &config.out {
                Some(dir) => write_file(dir, "ingest.json", &json)?,
                None => stdout.write_all(&json)?,
            }
            Ok(EXIT_OK)
        }
        Command::Weights(args) => {
            let config = args.resolve()?;
            let outcome = with_workers(config.workers, || cmd_weights(&config))??;
            match &config.out {
                Some(dir) => {
                    write_file(dir, "weights.csv", &outcome.csv)?;
                    write_file(dir, "convergence.json", &to_json(&outcome.summary)?)?;
                }
                None => stdout.write_all(&outcome.csv)?,
            }
            eprintln!(
                "fairness/goodness: {} iteration(s), final change {:.3e}, {}",
                outcome.summary.iterations,
                outcome.summary.final_delta,
                if outcome.summary.converged { "converged" } else { "NOT converged" }
            );
            Ok(if outcome.summary.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
        }
        Command::Evaluate(args) => {
            let config = args.resolve()?;
            let outcome = with_workers(config.workers, || cmd_evaluate(&config))??;
            let json = report_json(&outcome.report)?;
            let elapsed = started.elapsed().as_secs_f64();
            match &config.out {
                Some(dir) => {
                    write_file(dir, "report.json", &json)?;
                    write_file(dir, "grid.csv", &outcome.grid_csv)?;
                    write_file(dir, "predictions.csv", &outcome.predictions_csv)?;
                    write_file(dir, "timing.json", &to_json(&serde_json::json!({ "seconds": elapsed }))?)?;
                }
                None => stdout.write_all(&json)?,
            }
            info!("evaluation finished in {elapsed:.2}s");
            eprintln!("evaluation finished in {elapsed:.2}s");
            Ok(EXIT_OK)
        }
        Command::Predict { run, vertices } => {
            let config = run.resolve()?;
            let record = with_workers(config.workers, || cmd_predict(&config, &vertices))??;
            stdout.write_all(&to_json(&record)?)?;
            Ok(EXIT_OK)
        }
        Command::Report { report } => {
            let text = cmd_report(&report)?;
            stdout.write_all(text.as_bytes())?;
            Ok(EXIT_OK)
        }
    }
}

/// Entry point for the binary: parses `args` and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli, stdout),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_FAILURE
            } else {
                EXIT_OK
            }
        }
    }
}
