//! Weighted bipartite rating graphs and their ingestion from delimited text.
//!
//! Source identifiers on each side are interned into dense ids, so the U side
//! and the V side are separate namespaces: user `"7"` and item `"7"` are
//! unrelated vertices.

use std::collections::HashMap;
use std::io::BufRead;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::VertexId;

/// Bijection between source string ids and dense ids `0..len`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Interner {
    names: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> VertexId {
        if let Some(&id) = self.lookup.get(name) {
            return VertexId(id);
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.lookup.insert(name.to_owned(), id);
        VertexId(id)
    }

    pub fn get(&self, name: &str) -> Option<VertexId> {
        self.lookup.get(name).copied().map(VertexId)
    }

    pub fn name(&self, id: VertexId) -> &str {
        &self.names[id.index()]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// One rating edge `(u, v, rating)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating {
    pub u: VertexId,
    pub v: VertexId,
    pub value: f64,
}

/// Which side of a bipartite graph becomes the vertex set of the induced
/// hypergraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    #[default]
    U,
    V,
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "u" | "users" => Ok(Side::U),
            "v" | "items" => Ok(Side::V),
            other => Err(Error::Config(format!("unknown vertex side {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct BipartiteGraph {
    pub u_ids: Interner,
    pub v_ids: Interner,
    pub edges: Vec<Rating>,
}

impl BipartiteGraph {
    /// Builds a graph from `(u, v, rating)` triples. A repeated `(u, v)` pair
    /// keeps the last rating; the number of superseded ratings is returned.
    pub fn from_triples<'a, I>(triples: I) -> (Self, usize)
    where
        I: IntoIterator<Item = (&'a str, &'a str, f64)>,
    {
        let mut builder = Builder::default();
        for (u, v, r) in triples {
            builder.push(u, v, r);
        }
        builder.finish()
    }

    pub fn u_count(&self) -> usize {
        self.u_ids.len()
    }

    pub fn v_count(&self) -> usize {
        self.v_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Exchanges the roles of U and V.
    pub fn swapped(&self) -> Self {
        BipartiteGraph {
            u_ids: self.v_ids.clone(),
            v_ids: self.u_ids.clone(),
            edges: self.edges.iter().map(|r| Rating { u: r.v, v: r.u, value: r.value }).collect(),
        }
    }

    /// The graph seen from `side`: unchanged for `U`, swapped for `V`.
    pub fn oriented(&self, side: Side) -> Self {
        match side {
            Side::U => self.clone(),
            Side::V => self.swapped(),
        }
    }

    pub fn rating_range(&self) -> Option<(f64, f64)> {
        self.edges.iter().fold(None, |acc, r| match acc {
            None => Some((r.value, r.value)),
            Some((lo, hi)) => Some((lo.min(r.value), hi.max(r.value))),
        })
    }
}

#[derive(Default)]
struct Builder {
    u_ids: Interner,
    v_ids: Interner,
    slot: HashMap<(u32, u32), usize>,
    edges: Vec<Rating>,
    duplicates: usize,
}

impl Builder {
    fn push(&mut self, u: &str, v: &str, value: f64) {
        let u = self.u_ids.intern(u);
        let v = self.v_ids.intern(v);
        match self.slot.get(&(u.0, v.0)) {
            Some(&i) => {
                self.edges[i].value = value;
                self.duplicates += 1;
            }
            None => {
                self.slot.insert((u.0, v.0), self.edges.len());
                self.edges.push(Rating { u, v, value });
            }
        }
    }

    fn finish(self) -> (BipartiteGraph, usize) {
        let graph = BipartiteGraph { u_ids: self.u_ids, v_ids: self.v_ids, edges: self.edges };
        (graph, self.duplicates)
    }
}

/// Field separator of an edge-list file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    Char(char),
    /// Any run of ASCII whitespace.
    Whitespace,
}

impl Default for Delimiter {
    fn default() -> Self {
        Delimiter::Char('\t')
    }
}

impl std::str::FromStr for Delimiter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "whitespace" | "ws" | "space+" => Ok(Delimiter::Whitespace),
            "\\t" | "tab" => Ok(Delimiter::Char('\t')),
            "comma" => Ok(Delimiter::Char(',')),
            _ => {
                let mut chars = s.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => Ok(Delimiter::Char(c)),
                    _ => Err(Error::Config(format!("unsupported delimiter {s:?}"))),
                }
            }
        }
    }
}

impl std::fmt::Display for Delimiter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Delimiter::Whitespace => f.write_str("whitespace"),
            Delimiter::Char('\t') => f.write_str("\\t"),
            Delimiter::Char(c) => write!(f, "{c}"),
        }
    }
}

/// Column layout of an edge list. Columns are zero-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub delimiter: Delimiter,
    pub u_col: usize,
    pub v_col: usize,
    pub rating_col: usize,
    /// Lines starting with any of these prefixes are skipped without being
    /// counted as malformed.
    pub comment_prefixes: Vec<String>,
}

impl Default for Schema {
    fn default() -> Self {
        Schema {
            delimiter: Delimiter::default(),
            u_col: 0,
            v_col: 1,
            rating_col: 2,
            comment_prefixes: vec!["#".into(), "%".into()],
        }
    }
}

impl Schema {
    pub fn with_delimiter(delimiter: Delimiter) -> Self {
        Schema { delimiter, ..Schema::default() }
    }

    fn split<'a>(&self, line: &'a str) -> Vec<&'a str> {
        match self.delimiter {
            Delimiter::Whitespace => line.split_ascii_whitespace().collect(),
            Delimiter::Char(c) => line.split(c).map(str::trim).collect(),
        }
    }
}

/// Result of parsing an edge list.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub graph: BipartiteGraph,
    /// Lines rejected for missing fields or a non-numeric rating.
    pub malformed: usize,
    /// Ratings superseded by a later line for the same `(u, v)` pair.
    pub duplicates: usize,
}

/// Parses `u v rating` records. Blank and comment lines are skipped; a line
/// with too few fields or a non-numeric rating is rejected and counted.
pub fn parse_bipartite_edges<R: BufRead>(reader: R, schema: &Schema) -> Result<Ingested> {
    let mut builder = Builder::default();
    let mut malformed = 0usize;
    let needed = schema.u_col.max(schema.v_col).max(schema.rating_col);

    for line in reader.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || schema.comment_prefixes.iter().any(|p| trimmed.starts_with(p.as_str())) {
            continue;
        }
        let fields = schema.split(trimmed);
        if fields.len() <= needed {
            malformed += 1;
            continue;
        }
        let (u, v) = (fields[schema.u_col], fields[schema.v_col]);
        match fields[schema.rating_col].parse::<f64>() {
            Ok(r) if r.is_finite() && !u.is_empty() && !v.is_empty() => builder.push(u, v, r),
            _ => malformed += 1,
        }
    }

    let duplicates = builder.duplicates;
    let (graph, _) = builder.finish();
    if graph.is_empty() {
        return Err(Error::NoEdges);
    }
    if malformed > 0 {
        warn!("skipped {malformed} malformed line(s)");
    }
    if duplicates > 0 {
        warn!("{duplicates} duplicate rating(s) superseded by later lines");
    }
    Ok(Ingested { graph, malformed, duplicates })
}
