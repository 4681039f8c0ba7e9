//! Neighborhoods of hyperedges, the neighborhood count `C`, and the distance
//! `D(e, f) = |C(e) − C(f)|`.
//!
//! For a hyperedge `e` with `s(e)` vertices, the base neighborhood is every
//! observed `f ≠ e` with
//!
//! ```text
//! |e ∩ f| ≥ ⌊s(e)/2⌋   and   s(f) ≤ M(s(e))
//! ```
//!
//! where `M` is either `+∞` or `ε·s` ([`SizePolicy`]). The refined
//! neighborhood keeps the members whose observed value lies within `h` of the
//! base neighborhood's average, and `C(e)` is its cardinality. `D` is a
//! metric on hyperedges modulo the relation `C(e) = C(f)`.
//!
//! Intersections are counted through the [`IncidenceIndex`] instead of
//! scanning all pairs: each posting of a vertex of `e` adds one to the shared
//! count of the hyperedge it points at.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{EdgeId, Hypergraph, IncidenceIndex, VertexId};
use crate::observation::ObservationMap;

/// The size bound `M` of a neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "epsilon", rename_all = "snake_case")]
pub enum SizePolicy {
    /// `M(s) = +∞`: no size control.
    Infinite,
    /// `M(s) = ε·s` with `ε ∈ (0, 2]`.
    EpsilonTimesSize(f64),
}

impl SizePolicy {
    pub fn epsilon(eps: f64) -> Result<Self> {
        if eps > 0.0 && eps <= 2.0 {
            Ok(SizePolicy::EpsilonTimesSize(eps))
        } else {
            Err(Error::InvalidParameter(format!("epsilon must lie in (0, 2], got {eps}")))
        }
    }

    pub fn epsilon_value(&self) -> Option<f64> {
        match *self {
            SizePolicy::Infinite => None,
            SizePolicy::EpsilonTimesSize(eps) => Some(eps),
        }
    }

    pub fn bound(&self, size: usize) -> f64 {
        match *self {
            SizePolicy::Infinite => f64::INFINITY,
            SizePolicy::EpsilonTimesSize(eps) => eps * size as f64,
        }
    }

    #[inline]
    pub fn admits(&self, query_size: usize, candidate_size: usize) -> bool {
        match *self {
            SizePolicy::Infinite => true,
            SizePolicy::EpsilonTimesSize(eps) => candidate_size as f64 <= eps * query_size as f64,
        }
    }
}

impl std::fmt::Display for SizePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SizePolicy::Infinite => f.write_str("inf"),
            SizePolicy::EpsilonTimesSize(eps) => write!(f, "{eps}"),
        }
    }
}

/// How the refinement radius `h` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "h", rename_all = "snake_case")]
pub enum HPolicy {
    Fixed(f64),
    /// Population standard deviation of `F` over the base neighborhood.
    StdDevOfNeighborhood,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    pub size_policy: SizePolicy,
    pub h_policy: HPolicy,
}

impl GeometryConfig {
    pub fn new(size_policy: SizePolicy, h_policy: HPolicy) -> Result<Self> {
        if let HPolicy::Fixed(h) = h_policy {
            if h.is_nan() || h <= 0.0 {
                return Err(Error::InvalidParameter(format!("h must be positive, got {h}")));
            }
        }
        if let SizePolicy::EpsilonTimesSize(eps) = size_policy {
            SizePolicy::epsilon(eps)?;
        }
        Ok(GeometryConfig { size_policy, h_policy })
    }
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig { size_policy: SizePolicy::Infinite, h_policy: HPolicy::StdDevOfNeighborhood }
    }
}

/// A hyperedge to compute a neighborhood for: an existing edge, or an ad-hoc
/// vertex set.
#[derive(Debug, Clone, Copy)]
pub struct Query<'a> {
    pub vertices: &'a [VertexId],
    /// The query's own id, kept out of its neighborhood.
    pub exclude: Option<EdgeId>,
}

impl<'a> Query<'a> {
    pub fn edge(hypergraph: &'a Hypergraph, e: EdgeId) -> Self {
        Query { vertices: &hypergraph.edge(e).vertices, exclude: Some(e) }
    }

    /// `vertices` must be strictly ascending.
    pub fn vertices(vertices: &'a [VertexId]) -> Self {
        Query { vertices, exclude: None }
    }

    pub fn size(&self) -> usize {
        self.vertices.len()
    }

    pub fn threshold(&self) -> usize {
        self.vertices.len() / 2
    }
}

/// Everything computed on the way to `C(e)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborhoodRecord {
    pub edge: Option<EdgeId>,
    pub size: usize,
    pub base: Vec<EdgeId>,
    pub avg: Option<f64>,
    pub h: Option<f64>,
    pub refined: Vec<EdgeId>,
    pub count: usize,
}

/// Reusable per-thread buffers for posting-list counting.
#[derive(Debug, Clone)]
pub struct Scratch {
    shared: Vec<u32>,
    touched: Vec<EdgeId>,
}

impl Scratch {
    pub fn new(edge_count: usize) -> Self {
        Scratch { shared: vec![0; edge_count], touched: Vec::new() }
    }
}

/// Observed hyperedges (other than `query.exclude`) sharing at least
/// `⌊s/2⌋` vertices with the query, ascending. No size test.
pub fn overlap_candidates(
    index: &IncidenceIndex,
    query: Query<'_>,
    observed: &ObservationMap,
    scratch: &mut Scratch,
) -> Vec<EdgeId> {
    let threshold = query.threshold();
    if threshold == 0 {
        return observed.domain().iter().copied().filter(|&f| Some(f) != query.exclude).collect();
    }
    let threshold = threshold as u32;
    let mut out = Vec::new();
    for &v in query.vertices {
        for &f in index.edges_of(v) {
            if Some(f) == query.exclude || !observed.contains(f) {
                continue;
            }
            let slot = &mut scratch.shared[f.index()];
            if *slot == 0 {
                scratch.touched.push(f);
            }
            *slot += 1;
        }
    }
    for f in scratch.touched.drain(..) {
        if scratch.shared[f.index()] >= threshold {
            out.push(f);
        }
        scratch.shared[f.index()] = 0;
    }
    out.sort_unstable();
    out
}

/// `N_{E₀,M}(e)`: observed hyperedges passing both the overlap and the size
/// test. `E₀` is the domain of `observed`.
pub fn base_neighborhood(
    hypergraph: &Hypergraph,
    index: &IncidenceIndex,
    query: Query<'_>,
    observed: &ObservationMap,
    policy: SizePolicy,
) -> Vec<EdgeId> {
    let mut scratch = Scratch::new(hypergraph.edge_count());
    let mut base = overlap_candidates(index, query, observed, &mut scratch);
    base.retain(|&f| policy.admits(query.size(), hypergraph.size(f)));
    base
}

// Shifting by the first value keeps the mean of equal values exact.
fn mean_of(values: impl Iterator<Item = f64> + Clone) -> Option<f64> {
    let mut it = values.clone();
    let first = it.next()?;
    let (n, shifted) = values.fold((0usize, 0.0), |(n, s), x| (n + 1, s + (x - first)));
    Some(first + shifted / n as f64)
}

/// `AVG(e)`: mean of `F` over the base neighborhood; `None` when it is empty.
pub fn neighborhood_average(f: &ObservationMap, base: &[EdgeId]) -> Option<f64> {
    mean_of(base.iter().map(|&e| value(f, e)))
}

/// The refinement radius for `base` under `policy`; `None` for an empty base.
pub fn tuning_h(f: &ObservationMap, base: &[EdgeId], policy: HPolicy) -> Option<f64> {
    if base.is_empty() {
        return None;
    }
    match policy {
        HPolicy::Fixed(h) => Some(h),
        HPolicy::StdDevOfNeighborhood => {
            let avg = neighborhood_average(f, base)?;
            let var = base.iter().map(|&e| (value(f, e) - avg).powi(2)).sum::<f64>() / base.len() as f64;
            Some(var.sqrt())
        }
    }
}

/// Absolute slack on the `≤ h` test. With the standard-deviation radius a
/// two-member base puts both members exactly at distance `h`, which rounding
/// would otherwise decide arbitrarily.
pub const REFINE_SLACK: f64 = 1e-12;

/// `N_{h,E₀,M}(e) = {f ∈ base : |F(f) − AVG| ≤ h}`.
pub fn refined_neighborhood(f: &ObservationMap, base: &[EdgeId], avg: Option<f64>, h: Option<f64>) -> Vec<EdgeId> {
    let (Some(avg), Some(h)) = (avg, h) else {
        return Vec::new();
    };
    base.iter().copied().filter(|&e| (value(f, e) - avg).abs() <= h + REFINE_SLACK).collect()
}

#[inline]
fn value(f: &ObservationMap, e: EdgeId) -> f64 {
    f.get(e).expect("neighborhood member outside the observation domain")
}

fn record_from_base(query: Query<'_>, f: &ObservationMap, base: Vec<EdgeId>, h_policy: HPolicy) -> NeighborhoodRecord {
    let avg = neighborhood_average(f, &base);
    let h = tuning_h(f, &base, h_policy);
    let refined = refined_neighborhood(f, &base, avg, h);
    NeighborhoodRecord { edge: query.exclude, size: query.size(), count: refined.len(), base, avg, h, refined }
}

/// Full neighborhood pipeline for one query.
pub fn neighborhood_record(
    hypergraph: &Hypergraph,
    index: &IncidenceIndex,
    query: Query<'_>,
    f: &ObservationMap,
    config: GeometryConfig,
) -> NeighborhoodRecord {
    let base = base_neighborhood(hypergraph, index, query, f, config.size_policy);
    record_from_base(query, f, base, config.h_policy)
}

/// `C(e)`.
pub fn neighborhood_count(
    hypergraph: &Hypergraph,
    index: &IncidenceIndex,
    query: Query<'_>,
    f: &ObservationMap,
    config: GeometryConfig,
) -> usize {
    neighborhood_record(hypergraph, index, query, f, config).count
}

/// `D(e, f) = |C(e) − C(f)|`.
#[inline]
pub fn hyperedge_distance(ce: usize, cf: usize) -> usize {
    ce.abs_diff(cf)
}

/// `e ≅ f` iff `C(e) = C(f)`.
#[inline]
pub fn equivalent(e: EdgeId, f: EdgeId, counts: &[usize]) -> bool {
    counts[e.index()] == counts[f.index()]
}

/// `C(e)` for every hyperedge of the hypergraph, observed or not, in id order.
pub fn batch_counts(
    hypergraph: &Hypergraph,
    index: &IncidenceIndex,
    f: &ObservationMap,
    config: GeometryConfig,
) -> Vec<usize> {
    let ids: Vec<EdgeId> = hypergraph.edge_ids().collect();
    ids.par_iter()
        .map_init(
            || Scratch::new(hypergraph.edge_count()),
            |scratch, &e| {
                let query = Query::edge(hypergraph, e);
                let mut base = overlap_candidates(index, query, f, scratch);
                base.retain(|&c| config.size_policy.admits(query.size(), hypergraph.size(c)));
                record_from_base(query, f, base, config.h_policy).count
            },
        )
        .collect()
}

/// A hypergraph, its index and an observation map bound to one
/// configuration. Counts are computed once on first use; a different `E₀`
/// or configuration needs a new `Geometry`.
pub struct Geometry<'a> {
    hypergraph: &'a Hypergraph,
    index: &'a IncidenceIndex,
    observed: &'a ObservationMap,
    config: GeometryConfig,
    counts: OnceLock<Vec<usize>>,
}

impl<'a> Geometry<'a> {
    pub fn new(
        hypergraph: &'a Hypergraph,
        index: &'a IncidenceIndex,
        observed: &'a ObservationMap,
        config: GeometryConfig,
    ) -> Self {
        Geometry { hypergraph, index, observed, config, counts: OnceLock::new() }
    }

    pub fn hypergraph(&self) -> &'a Hypergraph {
        self.hypergraph
    }

    pub fn observed(&self) -> &'a ObservationMap {
        self.observed
    }

    pub fn config(&self) -> GeometryConfig {
        self.config
    }

    pub fn record(&self, e: EdgeId) -> NeighborhoodRecord {
        self.record_for(Query::edge(self.hypergraph, e))
    }

    pub fn record_for(&self, query: Query<'_>) -> NeighborhoodRecord {
        neighborhood_record(self.hypergraph, self.index, query, self.observed, self.config)
    }

    pub fn counts(&self) -> &[usize] {
        self.counts.get_or_init(|| batch_counts(self.hypergraph, self.index, self.observed, self.config))
    }

    pub fn count(&self, e: EdgeId) -> usize {
        self.counts()[e.index()]
    }

    pub fn distance(&self, e: EdgeId, f: EdgeId) -> usize {
        hyperedge_distance(self.count(e), self.count(f))
    }

    pub fn equivalent(&self, e: EdgeId, f: EdgeId) -> bool {
        equivalent(e, f, self.counts())
    }

    /// Neighborhood records of every hyperedge, in id order.
    pub fn records(&self) -> Vec<NeighborhoodRecord> {
        let ids: Vec<EdgeId> = self.hypergraph.edge_ids().collect();
        ids.par_iter().map(|&e| self.record(e)).collect()
    }
}

/// Per-edge results of one size policy in a [`sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepColumn {
    pub policy: SizePolicy,
    /// `C(e)` for every hyperedge id.
    pub counts: Vec<usize>,
    /// Per hyperedge, the number of refined neighbors carrying each label
    /// `1..=q` (flattened, `q` entries per edge). Present only when a label
    /// map was supplied.
    pub tallies: Option<Vec<u32>>,
}

impl SweepColumn {
    pub fn tally(&self, e: EdgeId, q: usize) -> Option<&[u32]> {
        self.tallies.as_ref().map(|t| &t[e.index() * q..(e.index() + 1) * q])
    }
}

/// Counts (and optionally per-label tallies of the refined neighborhoods)
/// for every hyperedge under several size policies at once. The overlap
/// scan is shared by all policies, since only the size test depends on `M`.
pub fn sweep(
    hypergraph: &Hypergraph,
    index: &IncidenceIndex,
    f: &ObservationMap,
    h_policy: HPolicy,
    policies: &[SizePolicy],
    labels: Option<&ObservationMap>,
) -> Result<Vec<SweepColumn>> {
    let q = match labels {
        Some(l) => l.q().ok_or(Error::KindMismatch { expected: "label" })? as usize,
        None => 0,
    };
    let ids: Vec<EdgeId> = hypergraph.edge_ids().collect();
    // per edge: per policy (count, tally)
    let rows: Vec<Vec<(usize, Vec<u32>)>> = ids
        .par_iter()
        .map_init(
            || Scratch::new(hypergraph.edge_count()),
            |scratch, &e| {
                let query = Query::edge(hypergraph, e);
                let candidates = overlap_candidates(index, query, f, scratch);
                policies
                    .iter()
                    .map(|policy| {
                        let base: Vec<EdgeId> = candidates
                            .iter()
                            .copied()
                            .filter(|&c| policy.admits(query.size(), hypergraph.size(c)))
                            .collect();
                        let rec = record_from_base(query, f, base, h_policy);
                        let tally = match labels {
                            Some(l) => label_tally(&rec.refined, l, q),
                            None => Vec::new(),
                        };
                        (rec.count, tally)
                    })
                    .collect()
            },
        )
        .collect();

    Ok(policies
        .iter()
        .enumerate()
        .map(|(p, &policy)| SweepColumn {
            policy,
            counts: rows.iter().map(|r| r[p].0).collect(),
            tallies: labels.map(|_| rows.iter().flat_map(|r| r[p].1.iter().copied()).collect()),
        })
        .collect())
}

/// Number of members of `set` carrying each label `1..=q`.
pub(crate) fn label_tally(set: &[EdgeId], labels: &ObservationMap, q: usize) -> Vec<u32> {
    let mut tally = vec![0u32; q];
    for &e in set {
        let l = labels.label(e).expect("neighbor without a label") as usize;
        tally[l - 1] += 1;
    }
    tally
}
