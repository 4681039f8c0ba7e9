//! Hyperedge weights from bipartite ratings.
//!
//! Ratings are rescaled to `[-1, 1]`, then the fairness/goodness mutual
//! recursion scores every rater (fairness in `[0, 1]`) and every item
//! (goodness in `[-1, 1]`):
//!
//! ```text
//! g(v) = 1/|in(v)|  · Σ_{u→v} f(u) · W(u, v)
//! f(u) = 1 − 1/|out(u)| · Σ_{u→v} |W(u, v) − g(v)| / 2
//! ```
//!
//! The hyperedge induced by item `v` takes `g(v)` as its weight. Labels come
//! from cutting the observed weight range into `q` equal-width intervals.

use std::io::Write;

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::bipartite::BipartiteGraph;
use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, VertexId};
use crate::observation::ObservationMap;

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 100;

/// Affinely maps the observed rating range onto `[-1, 1]`. A graph whose
/// ratings are all equal maps every rating to `0`.
pub fn normalize_ratings(graph: &BipartiteGraph) -> BipartiteGraph {
    let mut out = graph.clone();
    let Some((lo, hi)) = graph.rating_range() else {
        return out;
    };
    let span = hi - lo;
    for r in &mut out.edges {
        r.value = if span > 0.0 { (2.0 * (r.value - lo) / span - 1.0).clamp(-1.0, 1.0) } else { 0.0 };
    }
    out
}

/// Converged (or not) fairness and goodness scores.
#[derive(Debug, Clone, Serialize)]
pub struct FairnessGoodness {
    /// Per U-vertex, in `[0, 1]`.
    pub fairness: Vec<f64>,
    /// Per V-vertex, in `[-1, 1]`. Items without ratings keep `NaN`.
    pub goodness: Vec<f64>,
    pub iterations: usize,
    /// Largest per-vertex change in the last iteration.
    pub final_delta: f64,
    pub converged: bool,
    /// Largest per-vertex change of every iteration, in order.
    pub deltas: Vec<f64>,
}

impl FairnessGoodness {
    pub fn goodness_of(&self, v: VertexId) -> Option<f64> {
        self.goodness.get(v.index()).copied().filter(|g| !g.is_nan())
    }
}

/// Synchronous fairness/goodness iteration: each step recomputes all
/// goodness values from the previous fairness, then all fairness values from
/// the new goodness.
#[derive(Debug, Clone)]
pub struct GoodnessSolver {
    // ratings grouped by item: (rater, rating)
    by_item: Vec<Vec<(u32, f64)>>,
    // ratings grouped by rater: (item, rating)
    by_rater: Vec<Vec<(u32, f64)>>,
    fairness: Vec<f64>,
    goodness: Vec<f64>,
}

impl GoodnessSolver {
    /// `graph` is expected to carry ratings in `[-1, 1]`
    /// (see [`normalize_ratings`]).
    pub fn new(graph: &BipartiteGraph) -> Self {
        let mut by_item = vec![Vec::new(); graph.v_count()];
        let mut by_rater = vec![Vec::new(); graph.u_count()];
        for r in &graph.edges {
            by_item[r.v.index()].push((r.u.0, r.value));
            by_rater[r.u.index()].push((r.v.0, r.value));
        }
        let goodness = by_item.iter().map(|l| if l.is_empty() { f64::NAN } else { 1.0 }).collect();
        GoodnessSolver { fairness: vec![1.0; graph.u_count()], goodness, by_item, by_rater }
    }

    pub fn fairness(&self) -> &[f64] {
        &self.fairness
    }

    pub fn goodness(&self) -> &[f64] {
        &self.goodness
    }

    /// One g-then-f update. Returns the largest absolute change of any score.
    pub fn step(&mut self) -> f64 {
        let fairness = &self.fairness;
        let goodness: Vec<f64> = self
            .by_item
            .par_iter()
            .map(|ratings| {
                if ratings.is_empty() {
                    return f64::NAN;
                }
                let sum: f64 = ratings.iter().map(|&(u, w)| fairness[u as usize] * w).sum();
                (sum / ratings.len() as f64).clamp(-1.0, 1.0)
            })
            .collect();
        let fairness: Vec<f64> = self
            .by_rater
            .par_iter()
            .map(|ratings| {
                if ratings.is_empty() {
                    return 1.0;
                }
                let sum: f64 = ratings.iter().map(|&(v, w)| (w - goodness[v as usize]).abs() / 2.0).sum();
                (1.0 - sum / ratings.len() as f64).clamp(0.0, 1.0)
            })
            .collect();

        let delta_g = max_change(&self.goodness, &goodness);
        let delta_f = max_change(&self.fairness, &fairness);
        self.goodness = goodness;
        self.fairness = fairness;
        delta_g.max(delta_f)
    }
}

fn max_change(old: &[f64], new: &[f64]) -> f64 {
    old.iter().zip(new).filter(|(a, b)| !a.is_nan() && !b.is_nan()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Iterates until the largest per-vertex change drops below `tol` or
/// `max_iter` steps have run. Non-convergence is reported in the result, not
/// as an error.
pub fn fairness_goodness(graph: &BipartiteGraph, tol: f64, max_iter: usize) -> FairnessGoodness {
    let mut solver = GoodnessSolver::new(graph);
    let mut deltas = Vec::new();
    let mut converged = false;
    while deltas.len() < max_iter {
        let delta = solver.step();
        deltas.push(delta);
        if delta < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        warn!("fairness/goodness did not converge within {max_iter} iterations");
    }
    FairnessGoodness {
        iterations: deltas.len(),
        final_delta: deltas.last().copied().unwrap_or(0.0),
        converged,
        deltas,
        fairness: solver.fairness,
        goodness: solver.goodness,
    }
}

/// `W(e_v) = g(v)` for every hyperedge, over the range `[-1, 1]`.
pub fn hyperedge_weights(hypergraph: &Hypergraph, scores: &FairnessGoodness) -> Result<ObservationMap> {
    let mut entries = Vec::with_capacity(hypergraph.edge_count());
    for e in hypergraph.edges() {
        let v = e.source.ok_or(Error::MissingSource(e.id.index()))?;
        let g = scores.goodness_of(v).ok_or(Error::MissingGoodness(v.index()))?;
        entries.push((e.id, g));
    }
    ObservationMap::weights(hypergraph.edge_count(), -1.0, 1.0, entries)
}

/// Interval boundaries `a_0 < a_1 < … < a_q` of an equal-width
/// bucketization. Label 1 covers `[a_0, a_1]`, label `i ≥ 2` covers
/// `(a_{i-1}, a_i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Buckets {
    pub bounds: Vec<f64>,
}

impl Buckets {
    pub fn equal_width(lo: f64, hi: f64, q: u32) -> Self {
        let width = (hi - lo) / q as f64;
        let mut bounds: Vec<f64> = (0..=q).map(|i| lo + i as f64 * width).collect();
        bounds[q as usize] = hi;
        Buckets { bounds }
    }

    pub fn q(&self) -> u32 {
        (self.bounds.len() - 1) as u32
    }

    pub fn label(&self, w: f64) -> u32 {
        // first i ≥ 1 with w ≤ a_i; values past either end fall in the edge buckets
        let upper = &self.bounds[1..];
        let i = upper.partition_point(|&a| a < w);
        (i as u32 + 1).min(self.q())
    }
}

/// Converts a weight map into labels `1..=q` using the observed min and max
/// as the interval ends. Constant weights all get label 1.
pub fn bucketize_labels(weights: &ObservationMap, q: u32) -> Result<(ObservationMap, Buckets)> {
    if q < 2 {
        return Err(Error::InvalidParameter(format!("q must be at least 2, got {q}")));
    }
    if weights.is_label() {
        return Err(Error::KindMismatch { expected: "weight" });
    }
    let (lo, hi) = weights.value_range().ok_or(Error::NoObservations)?;
    if lo == hi {
        warn!("all observed weights equal {lo}; every hyperedge gets label 1");
    }
    let buckets = Buckets::equal_width(lo, hi, q);
    let labels = ObservationMap::labels(
        weights.edge_count(),
        q,
        weights.iter().map(|(e, w)| (e, if lo == hi { 1 } else { buckets.label(w) })),
    )?;
    Ok((labels, buckets))
}

/// Writes `edge_id,source_item,weight` rows.
pub fn write_weights_csv<W: Write>(
    out: W,
    hypergraph: &Hypergraph,
    item_names: &[String],
    weights: &ObservationMap,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["edge_id", "source_item", "weight"])?;
    for e in hypergraph.edges() {
        let Some(w) = weights.get(e.id) else { continue };
        let item = e.source.map(|v| item_names[v.index()].as_str()).unwrap_or("");
        wtr.write_record([e.id.to_string(), item.to_owned(), w.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Goodness weights of the hyperedges of `graph`'s induced hypergraph:
/// normalize, iterate fairness/goodness, read off item scores.
pub fn goodness_weights(
    graph: &BipartiteGraph,
    hypergraph: &Hypergraph,
    tol: f64,
    max_iter: usize,
) -> Result<(ObservationMap, FairnessGoodness)> {
    let scores = fairness_goodness(&normalize_ratings(graph), tol, max_iter);
    let weights = hyperedge_weights(hypergraph, &scores)?;
    Ok((weights, scores))
}
