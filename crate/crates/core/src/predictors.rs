//! Nearest-neighbor predictors over hyperedges.
//!
//! *Modified kNN* works directly with `D(e, e₀) = |C(e) − C(e₀)|`. Because `D`
//! takes few distinct values, neighbors are chosen by distance shells: the
//! `k` smallest distinct distances, and every observed hyperedge at any of
//! them.
//!
//! *Embedded kNN* maps every hyperedge to the vector of per-label counts of
//! its refined neighborhood, a point of `ℕ^q ⊂ ℝ^q`, and runs classical
//! Euclidean kNN there.

use std::collections::BTreeMap;

use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{hyperedge_distance, label_tally, Geometry, NeighborhoodRecord, Query};
use crate::hypergraph::EdgeId;
use crate::observation::ObservationMap;

/// The modified-kNN neighbor set of one query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellSet {
    pub query_count: usize,
    /// The selected distinct distances, ascending.
    pub shells: Vec<usize>,
    /// Observed hyperedges in the selected shells with their distance, by id.
    pub members: Vec<(EdgeId, usize)>,
    /// Number of distinct distances available, `r_e`.
    pub available: usize,
    /// The requested `k` exceeded `available`.
    pub clamped: bool,
}

impl ShellSet {
    pub fn member_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.members.iter().map(|&(e, _)| e)
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    Ok(())
}

/// `kNN(e)` for a query whose count is `query_count`, over the observed
/// hyperedges of `observed` with counts `counts` (indexed by edge id).
/// A `k` above the number of distinct distances is clamped.
pub fn knn_shells(query_count: usize, observed: &ObservationMap, counts: &[usize], k: usize) -> Result<ShellSet> {
    check_k(k)?;
    if observed.is_empty() {
        return Err(Error::NoObservations);
    }
    let distances: Vec<(EdgeId, usize)> =
        observed.domain().iter().map(|&e| (e, hyperedge_distance(query_count, counts[e.index()]))).collect();
    let mut distinct: Vec<usize> = distances.iter().map(|&(_, d)| d).collect();
    distinct.sort_unstable();
    distinct.dedup();

    let available = distinct.len();
    let clamped = k > available;
    if clamped {
        warn!("k = {k} exceeds the {available} distinct distance(s); using all shells");
    }
    distinct.truncate(k.min(available));
    let radius = *distinct.last().unwrap();
    let members = distances.into_iter().filter(|&(_, d)| d <= radius).collect();
    Ok(ShellSet { query_count, shells: distinct, members, available, clamped })
}

/// `W̄(e)`: mean observed weight over `kNN(e)`.
pub fn predict_weight_modified(
    query_count: usize,
    weights: &ObservationMap,
    counts: &[usize],
    k: usize,
) -> Result<f64> {
    let shells = knn_shells(query_count, weights, counts, k)?;
    let sum: f64 = shells.member_ids().map(|e| weights.get(e).unwrap()).sum();
    Ok(sum / shells.members.len() as f64)
}

/// `L̄(e)`: the unique most frequent label over `kNN(e)`, otherwise the
/// closest integer to the mean label.
pub fn predict_label_modified(query_count: usize, labels: &ObservationMap, counts: &[usize], k: usize) -> Result<u32> {
    let q = labels.q().ok_or(Error::KindMismatch { expected: "label" })?;
    let shells = knn_shells(query_count, labels, counts, k)?;
    let members: Vec<EdgeId> = shells.member_ids().collect();
    Ok(resolve_label(&label_tally(&members, labels, q as usize)))
}

/// Label vote over a tally (`tally[i]` = number of votes for label `i + 1`).
///
/// A unique most frequent label wins. On a tie for the top frequency the
/// mean label is rounded half up. An empty tally yields label 1.
pub fn resolve_label(tally: &[u32]) -> u32 {
    let q = tally.len() as u32;
    let top = tally.iter().copied().max().unwrap_or(0);
    if top == 0 {
        return 1;
    }
    let mut modes = tally.iter().enumerate().filter(|&(_, &c)| c == top);
    let first = modes.next().unwrap().0;
    if modes.next().is_none() {
        return first as u32 + 1;
    }
    let n: u64 = tally.iter().map(|&c| c as u64).sum();
    let sum: u64 = tally.iter().enumerate().map(|(i, &c)| (i as u64 + 1) * c as u64).sum();
    // floor(sum/n + 1/2) in integers
    let rounded = (2 * sum + n) / (2 * n);
    (rounded as u32).clamp(1, q)
}

/// Aggregates of the observed hyperedges sharing one count value.
#[derive(Debug, Clone, Default, PartialEq)]
struct CountBin {
    n: usize,
    sum: f64,
    tally: Vec<u32>,
}

/// Accumulated neighbor statistics for one `k`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NeighborAggregate {
    pub n: usize,
    pub sum: f64,
    /// Per-label vote counts; empty for weight maps.
    pub tally: Vec<u32>,
}

impl NeighborAggregate {
    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    fn absorb(&mut self, n: usize, sum: f64, tally: &[u32]) {
        self.n += n;
        self.sum += sum;
        if self.tally.len() < tally.len() {
            self.tally.resize(tally.len(), 0);
        }
        for (a, b) in self.tally.iter_mut().zip(tally) {
            *a += b;
        }
    }
}

/// Observed hyperedges grouped by count value, for answering modified-kNN
/// queries for every `k` at once without touching individual members.
#[derive(Debug, Clone)]
pub struct ShellIndex {
    values: Vec<usize>,
    bins: Vec<CountBin>,
}

impl ShellIndex {
    pub fn new(observed: &ObservationMap, counts: &[usize]) -> Result<Self> {
        if observed.is_empty() {
            return Err(Error::NoObservations);
        }
        let q = observed.q().unwrap_or(0) as usize;
        let mut grouped: BTreeMap<usize, CountBin> = BTreeMap::new();
        for (e, v) in observed.iter() {
            let bin = grouped
                .entry(counts[e.index()])
                .or_insert_with(|| CountBin { tally: vec![0; q], ..Default::default() });
            bin.n += 1;
            bin.sum += v;
            if q > 0 {
                bin.tally[v as usize - 1] += 1;
            }
        }
        let (values, bins) = grouped.into_iter().unzip();
        Ok(ShellIndex { values, bins })
    }

    /// Aggregates of `kNN` for `k = 1..=k_max` (entry `k - 1`), plus the
    /// number of distinct distances. Entries past that number repeat the
    /// full set.
    pub fn aggregates(&self, query_count: usize, k_max: usize) -> (Vec<NeighborAggregate>, usize) {
        let c = query_count;
        // `hi` is the first value > c - 1, walking outward on both sides
        let mut hi = self.values.partition_point(|&v| v < c);
        let mut lo = hi; // values[..lo] remain on the left
        let mut acc = NeighborAggregate::default();
        let mut out = Vec::with_capacity(k_max);
        let mut shells = 0;
        while lo > 0 || hi < self.values.len() {
            let dl = if lo > 0 { Some(c - self.values[lo - 1]) } else { None };
            let dr = if hi < self.values.len() { Some(self.values[hi] - c) } else { None };
            let d = match (dl, dr) {
                (Some(a), Some(b)) => a.min(b),
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => unreachable!(),
            };
            if dl == Some(d) {
                lo -= 1;
                let b = &self.bins[lo];
                acc.absorb(b.n, b.sum, &b.tally);
            }
            if dr == Some(d) {
                let b = &self.bins[hi];
                acc.absorb(b.n, b.sum, &b.tally);
                hi += 1;
            }
            shells += 1;
            if out.len() < k_max {
                out.push(acc.clone());
            }
        }
        while out.len() < k_max {
            out.push(acc.clone());
        }
        (out, shells)
    }
}

/// `T(e) = (η_1, …, η_q)`, the per-label counts of a refined neighborhood.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct FeatureVector {
    pub edge: Option<EdgeId>,
    pub components: Vec<u32>,
}

impl FeatureVector {
    pub fn q(&self) -> usize {
        self.components.len()
    }

    pub fn squared_distance(&self, other: &[u32]) -> u64 {
        self.components
            .iter()
            .zip(other)
            .map(|(&a, &b)| {
                let d = a.abs_diff(b) as u64;
                d * d
            })
            .sum()
    }
}

/// Tallies the labels of `refined` into a feature vector of length `q`.
pub fn feature_vector(edge: Option<EdgeId>, refined: &[EdgeId], labels: &ObservationMap, q: usize) -> FeatureVector {
    FeatureVector { edge, components: label_tally(refined, labels, q) }
}

/// One distinct training point and the hyperedges mapped onto it.
#[derive(Debug, Clone)]
struct PointGroup {
    point: Vec<u32>,
    members: Vec<EdgeId>,
}

/// The embedded training set: images of the observed hyperedges in `ℝ^q`,
/// grouped by identical point.
#[derive(Debug, Clone)]
pub struct FeatureSpace {
    q: usize,
    groups: Vec<PointGroup>,
    len: usize,
}

impl FeatureSpace {
    /// `points` pairs each observed hyperedge with its feature vector.
    pub fn new<I>(q: usize, points: I) -> Result<Self>
    where
        I: IntoIterator<Item = (EdgeId, Vec<u32>)>,
    {
        let mut grouped: BTreeMap<Vec<u32>, Vec<EdgeId>> = BTreeMap::new();
        let mut len = 0;
        for (e, p) in points {
            if p.len() != q {
                return Err(Error::InvalidParameter(format!(
                    "feature vector of length {} in a space of dimension {q}",
                    p.len()
                )));
            }
            grouped.entry(p).or_default().push(e);
            len += 1;
        }
        if len == 0 {
            return Err(Error::NoObservations);
        }
        let groups = grouped
            .into_iter()
            .map(|(point, mut members)| {
                members.sort_unstable();
                PointGroup { point, members }
            })
            .collect();
        Ok(FeatureSpace { q, groups, len })
    }

    /// Builds training points for every observed hyperedge of the geometry,
    /// each from its own refined neighborhood (itself excluded), tallied by
    /// `labels`.
    pub fn from_geometry(geometry: &Geometry<'_>, labels: &ObservationMap) -> Result<Self> {
        let q = labels.q().ok_or(Error::KindMismatch { expected: "label" })? as usize;
        let points: Vec<(EdgeId, Vec<u32>)> = geometry
            .observed()
            .domain()
            .iter()
            .map(|&e| {
                let rec = geometry.record(e);
                (e, label_tally(&rec.refined, labels, q))
            })
            .collect();
        Self::new(q, points)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Distinct training points ordered by squared distance to `query`
    /// (ties by point order), as `(squared distance, group index)`.
    fn ranked(&self, query: &FeatureVector) -> Vec<(u64, usize)> {
        let mut ranked: Vec<(u64, usize)> =
            self.groups.iter().enumerate().map(|(i, g)| (query.squared_distance(&g.point), i)).collect();
        ranked.sort_unstable();
        ranked
    }

    /// Classical kNN: the `k` nearest training hyperedges, plus every other
    /// one at the same distance as the `k`-th. `k` above the training size is
    /// clamped.
    pub fn neighbors(&self, query: &FeatureVector, k: usize) -> Result<Vec<(EdgeId, u64)>> {
        check_k(k)?;
        let mut out = Vec::new();
        let mut radius = None;
        for (d, i) in self.ranked(query) {
            if let Some(r) = radius {
                if d > r {
                    break;
                }
            }
            out.extend(self.groups[i].members.iter().map(|&e| (e, d)));
            if radius.is_none() && out.len() >= k {
                radius = Some(d);
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Neighbor aggregates of `query` for `k = 1..=k_max` over the values of
    /// `f` (a weight or label map defined on every training hyperedge).
    pub fn aggregates(&self, query: &FeatureVector, f: &ObservationMap, k_max: usize) -> Vec<NeighborAggregate> {
        let q = f.q().unwrap_or(0) as usize;
        let ranked = self.ranked(query);
        let mut out = Vec::with_capacity(k_max);
        let mut acc = NeighborAggregate { tally: vec![0; q], ..Default::default() };
        let mut i = 0;
        while i < ranked.len() && out.len() < k_max {
            // absorb every group at this distance
            let d = ranked[i].0;
            while i < ranked.len() && ranked[i].0 == d {
                let g = &self.groups[ranked[i].1];
                let mut tally = vec![0u32; q];
                let mut sum = 0.0;
                for &e in &g.members {
                    let v = f.get(e).expect("training hyperedge without a value");
                    sum += v;
                    if q > 0 {
                        tally[v as usize - 1] += 1;
                    }
                }
                acc.absorb(g.members.len(), sum, &tally);
                i += 1;
            }
            while out.len() < k_max && out.len() < acc.n {
                out.push(acc.clone());
            }
        }
        while out.len() < k_max {
            out.push(acc.clone());
        }
        out
    }
}

/// Label of `query` by classical kNN in the embedded space.
pub fn predict_label_embedded(
    space: &FeatureSpace,
    query: &FeatureVector,
    labels: &ObservationMap,
    k: usize,
) -> Result<u32> {
    let q = labels.q().ok_or(Error::KindMismatch { expected: "label" })? as usize;
    let members: Vec<EdgeId> = space.neighbors(query, k)?.into_iter().map(|(e, _)| e).collect();
    Ok(resolve_label(&label_tally(&members, labels, q)))
}

/// Weight of `query` as the unweighted mean over its embedded kNN.
pub fn predict_weight_embedded(
    space: &FeatureSpace,
    query: &FeatureVector,
    weights: &ObservationMap,
    k: usize,
) -> Result<f64> {
    let members = space.neighbors(query, k)?;
    let sum: f64 = members.iter().map(|&(e, _)| weights.get(e).expect("training hyperedge without a weight")).sum();
    Ok(sum / members.len() as f64)
}

/// Feature vector of an arbitrary query under a geometry.
pub fn embed(
    geometry: &Geometry<'_>,
    query: Query<'_>,
    labels: &ObservationMap,
) -> Result<(FeatureVector, NeighborhoodRecord)> {
    let q = labels.q().ok_or(Error::KindMismatch { expected: "label" })? as usize;
    let rec = geometry.record_for(query);
    Ok((feature_vector(query.exclude, &rec.refined, labels, q), rec))
}
