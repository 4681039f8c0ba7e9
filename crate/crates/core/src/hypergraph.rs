//! Hypergraphs induced from bipartite graphs, plus the vertex-to-hyperedge
//! incidence index used by every neighborhood query.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bipartite::BipartiteGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId(pub u32);

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hyperedge {
    pub id: EdgeId,
    /// Strictly ascending.
    pub vertices: Vec<VertexId>,
    /// The V-side vertex this hyperedge was induced from.
    pub source: Option<VertexId>,
}

impl Hyperedge {
    pub fn size(&self) -> usize {
        self.vertices.len()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Hypergraph {
    vertex_count: usize,
    edges: Vec<Hyperedge>,
    /// Empty vertex sets skipped during construction.
    dropped_empty: usize,
}

impl Hypergraph {
    /// Builds a hypergraph from explicit vertex lists. Lists are sorted and
    /// deduplicated; empty lists are dropped and counted, so edge ids are
    /// assigned densely over the kept lists in input order.
    pub fn from_vertex_sets<I, S>(vertex_count: usize, sets: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = u32>,
    {
        Self::from_sourced_sets(vertex_count, sets.into_iter().map(|s| (s, None)))
    }

    fn from_sourced_sets<I, S>(vertex_count: usize, sets: I) -> Self
    where
        I: IntoIterator<Item = (S, Option<VertexId>)>,
        S: IntoIterator<Item = u32>,
    {
        let mut edges = Vec::new();
        let mut dropped_empty = 0;
        for (set, source) in sets {
            let mut vertices: Vec<VertexId> = set.into_iter().map(VertexId).collect();
            vertices.sort_unstable();
            vertices.dedup();
            if vertices.is_empty() {
                dropped_empty += 1;
                continue;
            }
            assert!(
                vertices.last().unwrap().index() < vertex_count,
                "vertex id out of range for a hypergraph on {vertex_count} vertices"
            );
            let id = EdgeId(edges.len() as u32);
            edges.push(Hyperedge { id, vertices, source });
        }
        Hypergraph { vertex_count, edges, dropped_empty }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Hyperedge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Hyperedge {
        &self.edges[id.index()]
    }

    pub fn size(&self, id: EdgeId) -> usize {
        self.edges[id.index()].vertices.len()
    }

    pub fn dropped_empty(&self) -> usize {
        self.dropped_empty
    }

    /// The multiset of hyperedge sizes, in edge-id order.
    pub fn sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().map(Hyperedge::size)
    }

    pub fn size_range(&self) -> Option<(usize, usize)> {
        let min = self.sizes().min()?;
        let max = self.sizes().max()?;
        Some((min, max))
    }

    /// Hyperedge ids in order, `0..edge_count`.
    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.edges.len() as u32).map(EdgeId)
    }
}

/// Induces the hypergraph whose vertices are the U side of `graph` and whose
/// hyperedges are `e_v = {u : (u, v) ∈ E}` for every `v` in V, in V-id order.
///
/// Items with identical rater sets stay distinct hyperedges. To use V as the
/// vertex set, induce from [`BipartiteGraph::swapped`].
pub fn induce_hypergraph(graph: &BipartiteGraph) -> Hypergraph {
    let mut raters: Vec<Vec<u32>> = vec![Vec::new(); graph.v_count()];
    for r in &graph.edges {
        raters[r.v.index()].push(r.u.0);
    }
    let sets = raters.into_iter().enumerate().map(|(v, us)| (us, Some(VertexId(v as u32))));
    Hypergraph::from_sourced_sets(graph.u_count(), sets)
}

/// `|a ∩ b|` for two strictly ascending vertex lists, by linear merge.
pub fn intersection_size(a: &[VertexId], b: &[VertexId]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Inverse incidence in CSR layout: for every vertex, the ascending ids of the
/// hyperedges containing it.
#[derive(Debug, Clone)]
pub struct IncidenceIndex {
    offsets: Vec<usize>,
    postings: Vec<EdgeId>,
}

impl IncidenceIndex {
    pub fn build(hypergraph: &Hypergraph) -> Self {
        let n = hypergraph.vertex_count();
        let mut offsets = vec![0usize; n + 1];
        for e in hypergraph.edges() {
            for v in &e.vertices {
                offsets[v.index() + 1] += 1;
            }
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut postings = vec![EdgeId(0); offsets[n]];
        // edges are visited in id order, so each posting list comes out sorted
        for e in hypergraph.edges() {
            for v in &e.vertices {
                postings[cursor[v.index()]] = e.id;
                cursor[v.index()] += 1;
            }
        }
        IncidenceIndex { offsets, postings }
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edges_of(&self, v: VertexId) -> &[EdgeId] {
        let i = v.index();
        &self.postings[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.offsets[v.index() + 1] - self.offsets[v.index()]
    }
}
