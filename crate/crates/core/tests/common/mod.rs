//! Random instances and brute-force oracles shared by the integration tests.
//!
//! The oracles deliberately avoid the library's indexes and caches: sets are
//! compared by `HashSet` membership, every candidate is scanned, and
//! averages are plain sums.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, HashSet};

use hyperknn::bipartite::BipartiteGraph;
use hyperknn::geometry::REFINE_SLACK;
use hyperknn::hypergraph::{EdgeId, Hypergraph, IncidenceIndex};
use hyperknn::observation::ObservationMap;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random hypergraph with a partial weight map and its `q`-label image.
pub struct Instance {
    pub sets: Vec<Vec<u32>>,
    pub hypergraph: Hypergraph,
    pub index: IncidenceIndex,
    pub weights: ObservationMap,
    pub labels: ObservationMap,
    pub q: u32,
}

pub struct InstanceShape {
    pub max_edges: usize,
    pub max_vertices: usize,
    pub max_size: usize,
    pub observed_fraction: f64,
}

impl Default for InstanceShape {
    fn default() -> Self {
        InstanceShape { max_edges: 60, max_vertices: 40, max_size: 8, observed_fraction: 0.6 }
    }
}

pub fn random_instance(rng: &mut impl Rng, shape: &InstanceShape) -> Instance {
    let nv = rng.gen_range(1..=shape.max_vertices);
    let ne = rng.gen_range(1..=shape.max_edges);
    // half the instances draw weights from a small grid so ties are common
    let discrete = rng.gen_bool(0.5);
    let q = rng.gen_range(2..=4);
    let mut sets = Vec::with_capacity(ne);
    for _ in 0..ne {
        let s = rng.gen_range(1..=shape.max_size.min(nv));
        let mut set: Vec<u32> = (0..nv as u32).collect::<Vec<_>>().choose_multiple(rng, s).copied().collect();
        set.sort_unstable();
        sets.push(set);
    }
    let hypergraph = Hypergraph::from_vertex_sets(nv, sets.iter().cloned());
    let index = IncidenceIndex::build(&hypergraph);
    let mut w = Vec::new();
    let mut l = Vec::new();
    for e in 0..ne as u32 {
        if rng.gen_bool(shape.observed_fraction) {
            let value = if discrete { rng.gen_range(-4..=4) as f64 / 4.0 } else { rng.gen_range(-1.0..=1.0) };
            w.push((EdgeId(e), value));
            l.push((EdgeId(e), rng.gen_range(1..=q)));
        }
    }
    let weights = ObservationMap::weights(ne, -1.0, 1.0, w).unwrap();
    let labels = ObservationMap::labels(ne, q, l).unwrap();
    Instance { sets, hypergraph, index, weights, labels, q }
}

/// Observed `(edge, value)` pairs of a map, by id.
pub fn entries(f: &ObservationMap) -> BTreeMap<usize, f64> {
    f.iter().map(|(e, v)| (e.index(), v)).collect()
}

/// `{f ∈ E₀ ∖ {exclude} : |q ∩ f| ≥ ⌊|q|/2⌋, s(f) ≤ ε·|q|}` by exhaustive scan.
pub fn oracle_base(
    sets: &[Vec<u32>],
    query: &[u32],
    exclude: Option<usize>,
    observed: &BTreeMap<usize, f64>,
    epsilon: Option<f64>,
) -> Vec<usize> {
    let q: HashSet<u32> = query.iter().copied().collect();
    let threshold = q.len() / 2;
    let mut out = Vec::new();
    for &f in observed.keys() {
        if Some(f) == exclude {
            continue;
        }
        let shared = sets[f].iter().filter(|v| q.contains(v)).count();
        let size_ok = match epsilon {
            None => true,
            Some(eps) => sets[f].len() as f64 <= eps * q.len() as f64,
        };
        if shared >= threshold && size_ok {
            out.push(f);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRecord {
    pub base: Vec<usize>,
    pub avg: Option<f64>,
    pub h: Option<f64>,
    pub refined: Vec<usize>,
}

impl OracleRecord {
    pub fn count(&self) -> usize {
        self.refined.len()
    }
}

/// The full neighborhood pipeline with naive sums. `fixed_h = None` means
/// the population standard deviation over the base.
pub fn oracle_record(
    sets: &[Vec<u32>],
    query: &[u32],
    exclude: Option<usize>,
    observed: &BTreeMap<usize, f64>,
    epsilon: Option<f64>,
    fixed_h: Option<f64>,
) -> OracleRecord {
    let base = oracle_base(sets, query, exclude, observed, epsilon);
    if base.is_empty() {
        return OracleRecord { base, avg: None, h: None, refined: Vec::new() };
    }
    let n = base.len() as f64;
    let avg = base.iter().map(|f| observed[f]).sum::<f64>() / n;
    let h = fixed_h.unwrap_or_else(|| (base.iter().map(|f| (observed[f] - avg).powi(2)).sum::<f64>() / n).sqrt());
    let refined = base.iter().copied().filter(|f| (observed[f] - avg).abs() <= h + REFINE_SLACK).collect();
    OracleRecord { base, avg: Some(avg), h: Some(h), refined }
}

/// `C(e)` for every edge of `sets`.
pub fn oracle_counts(
    sets: &[Vec<u32>],
    observed: &BTreeMap<usize, f64>,
    epsilon: Option<f64>,
    fixed_h: Option<f64>,
) -> Vec<usize> {
    (0..sets.len()).map(|e| oracle_record(sets, &sets[e], Some(e), observed, epsilon, fixed_h).count()).collect()
}

/// Modified-kNN members: every observed edge whose distance is among the `k`
/// smallest distinct distances.
pub fn oracle_shells(query_count: usize, observed: &BTreeMap<usize, f64>, counts: &[usize], k: usize) -> Vec<usize> {
    let dist = |f: usize| (query_count as i64 - counts[f] as i64).unsigned_abs() as usize;
    let mut distinct: Vec<usize> = observed.keys().map(|&f| dist(f)).collect();
    distinct.sort();
    distinct.dedup();
    let radius = distinct[k.min(distinct.len()) - 1];
    observed.keys().copied().filter(|&f| dist(f) <= radius).collect()
}

/// Per-label tally `(η_1..η_q)` of a set.
pub fn oracle_tally(set: &[usize], labels: &BTreeMap<usize, f64>, q: u32) -> Vec<u32> {
    (1..=q).map(|i| set.iter().filter(|f| labels[f] as u32 == i).count() as u32).collect()
}

/// Classical kNN over integer points: everything within the `k`-th smallest
/// squared distance.
pub fn oracle_embedded_neighbors(query: &[u32], points: &BTreeMap<usize, Vec<u32>>, k: usize) -> Vec<usize> {
    let d2 = |p: &[u32]| query.iter().zip(p).map(|(&a, &b)| (a as i64 - b as i64).pow(2) as u64).sum::<u64>();
    let mut all: Vec<u64> = points.values().map(|p| d2(p)).collect();
    all.sort();
    let radius = all[k.min(all.len()) - 1];
    points.iter().filter(|(_, p)| d2(p) <= radius).map(|(&e, _)| e).collect()
}

/// Unique mode, otherwise the mean rounded half up into `1..=q`.
pub fn oracle_vote(labels: &[u32], q: u32) -> u32 {
    let mut freq = vec![0usize; q as usize + 1];
    for &l in labels {
        freq[l as usize] += 1;
    }
    let top = *freq.iter().max().unwrap();
    let modes: Vec<usize> = (1..=q as usize).filter(|&i| freq[i] == top).collect();
    if modes.len() == 1 {
        return modes[0] as u32;
    }
    let mean = labels.iter().map(|&l| l as f64).sum::<f64>() / labels.len() as f64;
    ((mean + 0.5).floor() as u32).clamp(1, q)
}

/// Label of `w` by scanning `[a0,a1], (a1,a2], …` in order.
pub fn oracle_bucket(w: f64, lo: f64, hi: f64, q: u32) -> u32 {
    if lo == hi {
        return 1;
    }
    let width = (hi - lo) / q as f64;
    if w <= lo + width {
        return 1;
    }
    for i in 2..=q {
        let a_prev = lo + (i - 1) as f64 * width;
        let a_i = if i == q { hi } else { lo + i as f64 * width };
        if w > a_prev && w <= a_i {
            return i;
        }
    }
    q
}

/// Hyperedges induced by grouping ratings by item, keyed by item name.
pub fn oracle_induced(triples: &[(String, String, f64)]) -> BTreeMap<String, HashSet<String>> {
    let mut out: BTreeMap<String, HashSet<String>> = BTreeMap::new();
    for (u, v, _) in triples {
        out.entry(v.clone()).or_default().insert(u.clone());
    }
    out
}

/// Fairness/goodness iterates computed straight from the update formulas,
/// over a list of `(u, v, rating)` index triples. Returns `(f, g)` after
/// every iteration.
pub fn oracle_fga(
    n_u: usize,
    n_v: usize,
    ratings: &[(usize, usize, f64)],
    iterations: usize,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut f = vec![1.0; n_u];
    let mut g = vec![1.0; n_v];
    let mut out = Vec::new();
    for _ in 0..iterations {
        let mut new_g = vec![0.0; n_v];
        for v in 0..n_v {
            let ins: Vec<_> = ratings.iter().filter(|r| r.1 == v).collect();
            let s: f64 = ins.iter().map(|r| f[r.0] * r.2).sum();
            new_g[v] = (s / ins.len() as f64).clamp(-1.0, 1.0);
        }
        let mut new_f = vec![0.0; n_u];
        for u in 0..n_u {
            let outs: Vec<_> = ratings.iter().filter(|r| r.0 == u).collect();
            let s: f64 = outs.iter().map(|r| (r.2 - new_g[r.1]).abs() / 2.0).sum();
            new_f[u] = (1.0 - s / outs.len() as f64).clamp(0.0, 1.0);
        }
        f = new_f;
        g = new_g;
        out.push((f.clone(), g.clone()));
    }
    out
}

/// A random rating graph in which every user and every item has at least one
/// rating, with ratings on a 1..=5 scale. Returns the graph and its index
/// triples.
pub fn random_ratings(
    rng: &mut impl Rng,
    n_u: usize,
    n_v: usize,
    density: f64,
) -> (BipartiteGraph, Vec<(usize, usize, f64)>) {
    let mut triples: Vec<(String, String, f64)> = Vec::new();
    let mut seen = HashSet::new();
    for u in 0..n_u {
        for v in 0..n_v {
            if rng.gen_bool(density) {
                triples.push((format!("u{u}"), format!("i{v}"), rng.gen_range(1..=5) as f64));
                seen.insert((u, v));
            }
        }
    }
    // guarantee coverage of both sides
    for u in 0..n_u {
        let v = u % n_v;
        if !seen.contains(&(u, v)) && !(0..n_v).any(|w| seen.contains(&(u, w))) {
            triples.push((format!("u{u}"), format!("i{v}"), rng.gen_range(1..=5) as f64));
            seen.insert((u, v));
        }
    }
    for v in 0..n_v {
        if !(0..n_u).any(|u| seen.contains(&(u, v))) {
            let u = v % n_u;
            triples.push((format!("u{u}"), format!("i{v}"), rng.gen_range(1..=5) as f64));
            seen.insert((u, v));
        }
    }
    let (graph, _) = BipartiteGraph::from_triples(triples.iter().map(|(u, v, r)| (u.as_str(), v.as_str(), *r)));
    let index_triples = graph.edges.iter().map(|r| (r.u.index(), r.v.index(), r.value)).collect();
    (graph, index_triples)
}

/// Ratings with planted item quality: users fall into communities, each
/// community rates only its own items, and every community has its own
/// quality level. Returns tab-separated `user item rating` lines.
pub fn planted_ratings(seed: u64) -> String {
    const COMMUNITY_USERS: usize = 100;
    const ITEMS: [usize; 5] = [20, 30, 40, 50, 60];
    const QUALITY: [f64; 5] = [1.6, 4.4, 2.4, 3.6, 3.0];
    let mut rng = rng(seed);
    let mut out = String::new();
    let mut item = 0;
    for (c, (&n_items, &level)) in ITEMS.iter().zip(&QUALITY).enumerate() {
        for _ in 0..n_items {
            let quality = level + rng.gen_range(-0.3..=0.3);
            for u in 0..COMMUNITY_USERS {
                if rng.gen_bool(0.6) {
                    let r = (quality + rng.gen_range(-1.0..=1.0)).round().clamp(1.0, 5.0);
                    out += &format!("user{}\titem{item}\t{r}\n", c * COMMUNITY_USERS + u);
                }
            }
            item += 1;
        }
    }
    out
}
