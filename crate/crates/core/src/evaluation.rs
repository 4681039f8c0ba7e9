//! Held-out evaluation and the `(k, ε)` grid search.

use std::cmp::Ordering;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sweep, HPolicy, SizePolicy, SweepColumn};
use crate::hypergraph::{EdgeId, Hypergraph, IncidenceIndex};
use crate::observation::ObservationMap;
use crate::predictors::{resolve_label, FeatureSpace, FeatureVector, NeighborAggregate, ShellIndex};
use crate::weighting::bucketize_labels;

/// Size-control constants searched by default.
pub const DEFAULT_EPSILONS: [f64; 5] = [5.0 / 3.0, 4.0 / 3.0, 1.0, 2.0 / 3.0, 0.5];
pub const DEFAULT_K_MAX: usize = 20;
pub const DEFAULT_HOLDOUT: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { holdout_fraction: DEFAULT_HOLDOUT, seed: 0 }
    }
}

/// Uniform random partition of the observed hyperedges into a training map
/// (the new `E₀`) and a held-out map, reproducible per seed.
pub fn split_observations(f: &ObservationMap, spec: SplitSpec) -> Result<(ObservationMap, ObservationMap)> {
    let n = f.len();
    let degenerate = || Error::DegenerateSplit { observed: n, fraction: spec.holdout_fraction };
    if n < 2 || !(spec.holdout_fraction > 0.0 && spec.holdout_fraction < 1.0) {
        return Err(degenerate());
    }
    let test_len = ((n as f64 * spec.holdout_fraction).round() as usize).clamp(1, n - 1);
    let mut ids = f.domain().to_vec();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let (test, train) = ids.split_at(test_len);
    Ok((f.restrict(train), f.restrict(test)))
}

fn check_nonempty<T>(pairs: &[T]) -> Result<()> {
    if pairs.is_empty() {
        Err(Error::EmptyPredictions)
    } else {
        Ok(())
    }
}

/// Mean absolute error over `(truth, prediction)` pairs.
pub fn mae(pairs: &[(f64, f64)]) -> Result<f64> {
    check_nonempty(pairs)?;
    Ok(pairs.iter().map(|(t, p)| (t - p).abs()).sum::<f64>() / pairs.len() as f64)
}

/// Root mean squared error over `(truth, prediction)` pairs.
pub fn rmse(pairs: &[(f64, f64)]) -> Result<f64> {
    check_nonempty(pairs)?;
    Ok((pairs.iter().map(|(t, p)| (t - p).powi(2)).sum::<f64>() / pairs.len() as f64).sqrt())
}

/// Fraction of misclassified `(truth, prediction)` pairs.
pub fn error_rate(pairs: &[(u32, u32)]) -> Result<f64> {
    check_nonempty(pairs)?;
    Ok(pairs.iter().filter(|(t, p)| t != p).count() as f64 / pairs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    #[default]
    Weight,
    Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Modified,
    Embedded,
}

/// How the best `(k, ε)` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// Select on the held-out set itself.
    #[default]
    Paper,
    /// Select on a validation split carved from the training set, then
    /// report the held-out score of the selected configuration.
    Validation,
}

macro_rules! parse_enum {
    ($ty:ty, $what:literal, $($name:literal => $val:expr),+) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.to_ascii_lowercase().as_str() {
                    $($name => Ok($val),)+
                    other => Err(Error::Config(format!(concat!("unknown ", $what, " {:?}"), other))),
                }
            }
        }
    };
}

parse_enum!(Task, "task", "weight" => Task::Weight, "label" => Task::Label);
parse_enum!(Method, "method", "modified" => Method::Modified, "embedded" => Method::Embedded);
parse_enum!(Protocol, "protocol", "paper" => Protocol::Paper, "validation" => Protocol::Validation);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub task: Task,
    pub method: Method,
    pub k_max: usize,
    /// Size-control constants; the unbounded policy is always searched too.
    pub epsilons: Vec<f64>,
    pub h_policy: HPolicy,
    /// Dimension of the embedding when predicting weights with embedded kNN.
    pub feature_q: u32,
    pub split: SplitSpec,
    pub protocol: Protocol,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            task: Task::Weight,
            method: Method::Modified,
            k_max: DEFAULT_K_MAX,
            epsilons: DEFAULT_EPSILONS.to_vec(),
            h_policy: HPolicy::StdDevOfNeighborhood,
            feature_q: 2,
            split: SplitSpec::default(),
            protocol: Protocol::Paper,
        }
    }
}

impl GridSpec {
    pub fn policies(&self) -> Result<Vec<SizePolicy>> {
        let mut out = self.epsilons.iter().map(|&e| SizePolicy::epsilon(e)).collect::<Result<Vec<_>>>()?;
        out.push(SizePolicy::Infinite);
        Ok(out)
    }

    fn validate(&self, f: &ObservationMap) -> Result<()> {
        if self.k_max == 0 {
            return Err(Error::InvalidParameter("k_max must be at least 1".into()));
        }
        match (self.task, f.is_label()) {
            (Task::Weight, true) => Err(Error::KindMismatch { expected: "weight" }),
            (Task::Label, false) => Err(Error::KindMismatch { expected: "label" }),
            _ => Ok(()),
        }
    }
}

/// One evaluated `(method, k, M)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub method: Method,
    pub k: usize,
    /// `None` for the unbounded size policy.
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mae: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<u32>,
    /// Queries for which `k` exceeded the available neighbors and was clamped.
    pub clamped: usize,
}

impl GridRow {
    /// MAE for weights, error rate for labels.
    pub fn criterion(&self) -> f64 {
        self.error_rate.or(self.mae).expect("row without a score")
    }

    pub fn size_policy(&self) -> SizePolicy {
        self.epsilon.map_or(SizePolicy::Infinite, SizePolicy::EpsilonTimesSize)
    }
}

/// Orders rows best first: smaller criterion, then smaller `k`, then larger
/// `ε` (unbounded counts as largest).
pub fn compare_rows(a: &GridRow, b: &GridRow) -> Ordering {
    let eps = |r: &GridRow| r.epsilon.unwrap_or(f64::INFINITY);
    a.criterion().total_cmp(&b.criterion()).then(a.k.cmp(&b.k)).then(eps(b).total_cmp(&eps(a)))
}

/// A single held-out prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub edge_id: EdgeId,
    pub truth: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub task: Task,
    pub protocol: Protocol,
    pub train_size: usize,
    pub test_size: usize,
    /// Scores used for selection: held-out scores under the paper protocol,
    /// validation scores otherwise. Ordered by policy, then `k`.
    pub rows: Vec<GridRow>,
    pub best: GridRow,
    /// Held-out score of `best`; equals `best` under the paper protocol.
    pub best_test: GridRow,
    /// Held-out predictions of the best configuration.
    #[serde(skip)]
    pub predictions: Vec<Prediction>,
}

/// Evaluates every `(k, M)` pair for one task and method on a seeded split of
/// `f` (weights for [`Task::Weight`], labels for [`Task::Label`]) and picks
/// the best cell.
pub fn grid_search(
    hypergraph: &Hypergraph,
    index: &IncidenceIndex,
    f: &ObservationMap,
    spec: &GridSpec,
) -> Result<GridResult> {
    spec.validate(f)?;
    let policies = spec.policies()?;
    let (train, test) = split_observations(f, spec.split)?;

    match spec.protocol {
        Protocol::Paper => {
            let cells = evaluate_cells(hypergraph, index, &train, &test, spec, &policies)?;
            let (best_ix, _) = cells.iter().enumerate().min_by(|a, b| compare_rows(&a.1.row, &b.1.row)).unwrap();
            let rows: Vec<GridRow> = cells.iter().map(|c| c.row.clone()).collect();
            let best = rows[best_ix].clone();
            Ok(GridResult {
                task: spec.task,
                protocol: spec.protocol,
                train_size: train.len(),
                test_size: test.len(),
                best_test: best.clone(),
                best,
                rows,
                predictions: cells.into_iter().nth(best_ix).unwrap().predictions,
            })
        }
        Protocol::Validation => {
            let inner = SplitSpec { seed: spec.split.seed.wrapping_add(0x9e37_79b9_7f4a_7c15), ..spec.split };
            let (fit, validation) = split_observations(&train, inner)?;
            let cells = evaluate_cells(hypergraph, index, &fit, &validation, spec, &policies)?;
            let rows: Vec<GridRow> = cells.into_iter().map(|c| c.row).collect();
            let best = rows.iter().min_by(|a, b| compare_rows(a, b)).unwrap().clone();
            let narrowed = GridSpec { k_max: best.k, ..spec.clone() };
            let mut chosen = evaluate_cells(hypergraph, index, &train, &test, &narrowed, &[best.size_policy()])?;
            let final_cell = chosen.swap_remove(best.k - 1);
            Ok(GridResult {
                task: spec.task,
                protocol: spec.protocol,
                train_size: train.len(),
                test_size: test.len(),
                rows,
                best,
                best_test: final_cell.row,
                predictions: final_cell.predictions,
            })
        }
    }
}

struct Cell {
    row: GridRow,
    predictions: Vec<Prediction>,
}

/// Scores every `(policy, k)` with `train` as `E₀` and the domain of `held`
/// as queries. Cells come out policy-major, `k` ascending.
fn evaluate_cells(
    hypergraph: &Hypergraph,
    index: &IncidenceIndex,
    train: &ObservationMap,
    held: &ObservationMap,
    spec: &GridSpec,
    policies: &[SizePolicy],
) -> Result<Vec<Cell>> {
    let feature_labels = match (spec.method, spec.task) {
        (Method::Modified, _) => None,
        (Method::Embedded, Task::Label) => Some(train.clone()),
        (Method::Embedded, Task::Weight) => Some(bucketize_labels(train, spec.feature_q)?.0),
    };
    let columns = sweep(hypergraph, index, train, spec.h_policy, policies, feature_labels.as_ref())?;
    let queries = held.domain();

    let mut cells = Vec::with_capacity(policies.len() * spec.k_max);
    for column in &columns {
        // per query: aggregates for k = 1..=k_max, and whether each k was clamped
        let per_query: Vec<(Vec<NeighborAggregate>, usize)> = match spec.method {
            Method::Modified => {
                let shells = ShellIndex::new(train, &column.counts)?;
                queries.par_iter().map(|&e| shells.aggregates(column.counts[e.index()], spec.k_max)).collect()
            }
            Method::Embedded => {
                let labels = feature_labels.as_ref().unwrap();
                let space = embedded_space(column, train, labels)?;
                let q = space.q();
                queries
                    .par_iter()
                    .map(|&e| {
                        let fv = FeatureVector { edge: Some(e), components: column.tally(e, q).unwrap().to_vec() };
                        (space.aggregates(&fv, train, spec.k_max), space.len())
                    })
                    .collect()
            }
        };

        for k in 1..=spec.k_max {
            let clamped = per_query.iter().filter(|(_, avail)| k > *avail).count();
            let predictions: Vec<Prediction> = queries
                .iter()
                .zip(&per_query)
                .map(|(&e, (aggs, _))| {
                    let agg = &aggs[k - 1];
                    let predicted = match spec.task {
                        Task::Weight => agg.mean(),
                        Task::Label => resolve_label(&agg.tally) as f64,
                    };
                    Prediction { edge_id: e, truth: held.get(e).unwrap(), predicted }
                })
                .collect();
            let row = score(spec, column.policy, k, clamped, &predictions, train.q())?;
            cells.push(Cell { row, predictions });
        }
    }
    Ok(cells)
}

fn embedded_space(column: &SweepColumn, train: &ObservationMap, labels: &ObservationMap) -> Result<FeatureSpace> {
    let q = labels.q().unwrap() as usize;
    FeatureSpace::new(q, train.domain().iter().map(|&e| (e, column.tally(e, q).unwrap().to_vec())))
}

fn score(
    spec: &GridSpec,
    policy: SizePolicy,
    k: usize,
    clamped: usize,
    predictions: &[Prediction],
    q: Option<u32>,
) -> Result<GridRow> {
    let mut row = GridRow {
        method: spec.method,
        k,
        epsilon: policy.epsilon_value(),
        mae: None,
        rmse: None,
        error_rate: None,
        q: None,
        clamped,
    };
    match spec.task {
        Task::Weight => {
            let pairs: Vec<(f64, f64)> = predictions.iter().map(|p| (p.truth, p.predicted)).collect();
            let (m, r) = (mae(&pairs)?, rmse(&pairs)?);
            assert!(m <= r + 1e-12, "MAE {m} exceeds RMSE {r}");
            row.mae = Some(m);
            row.rmse = Some(r);
        }
        Task::Label => {
            let pairs: Vec<(u32, u32)> = predictions.iter().map(|p| (p.truth as u32, p.predicted as u32)).collect();
            row.error_rate = Some(error_rate(&pairs)?);
            row.q = q;
        }
    }
    Ok(row)
}
