//! Nearest-neighbor prediction of hyperedge weights and labels.
//!
//! A bipartite rating list (users x items) induces a hypergraph with one
//! hyperedge per item. Item quality scores become hyperedge weights; the
//! count of weight-similar overlapping hyperedges places every hyperedge on
//! a line, and k-nearest-neighbor predictors work on that line or on a
//! small label-tally embedding.
//!
//! ```no_run
//! use hyperknn::prelude::*;
//!
//! let text = "alice\tbook\t5\nbob\tbook\t4\nalice\tfilm\t1\n";
//! let ingested = parse_bipartite_edges(text.as_bytes(), &Schema::default()).unwrap();
//! let hypergraph = induce_hypergraph(&ingested.graph);
//! let (weights, _) = goodness_weights(&ingested.graph, &hypergraph, 1e-6, 100).unwrap();
//! assert_eq!(weights.len(), 2);
//! ```

pub mod bipartite;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod hypergraph;
pub mod observation;
pub mod predictors;
pub mod report;
pub mod weighting;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::bipartite::{parse_bipartite_edges, BipartiteGraph, Delimiter, Schema, Side};
    pub use crate::error::{Error, Result};
    pub use crate::evaluation::{grid_search, split_observations, GridSpec, Method, Protocol, SplitSpec, Task};
    pub use crate::geometry::{
        base_neighborhood, refined_neighborhood, Geometry, GeometryConfig, HPolicy, NeighborhoodRecord, Query,
        SizePolicy,
    };
    pub use crate::hypergraph::{induce_hypergraph, EdgeId, Hypergraph, IncidenceIndex, VertexId};
    pub use crate::observation::ObservationMap;
    pub use crate::predictors::{
        embed, knn_shells, predict_label_embedded, predict_label_modified, predict_weight_embedded,
        predict_weight_modified, FeatureSpace,
    };
    pub use crate::weighting::{bucketize_labels, fairness_goodness, goodness_weights, hyperedge_weights};
}
