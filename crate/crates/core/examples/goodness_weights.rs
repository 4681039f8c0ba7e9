//! Item quality scores as hyperedge weights, and their bucketized labels.

use hyperknn::bipartite::BipartiteGraph;
use hyperknn::hypergraph::induce_hypergraph;
use hyperknn::weighting::{bucketize_labels, goodness_weights};

fn main() -> hyperknn::Result<()> {
    // two honest raters and one who rates everything 5
    let ratings = [
        ("ann", "good-book", 5.0),
        ("ann", "bad-book", 1.0),
        ("ann", "ok-book", 3.0),
        ("ben", "good-book", 4.0),
        ("ben", "bad-book", 2.0),
        ("ben", "ok-book", 3.0),
        ("shill", "good-book", 5.0),
        ("shill", "bad-book", 5.0),
        ("shill", "ok-book", 5.0),
    ];
    let (graph, _) = BipartiteGraph::from_triples(ratings);
    let hypergraph = induce_hypergraph(&graph);
    let (weights, scores) = goodness_weights(&graph, &hypergraph, 1e-6, 100)?;

    println!(
        "converged: {} after {} iterations (last change {:.2e})",
        scores.converged, scores.iterations, scores.final_delta
    );
    for (u, f) in graph.u_ids.names().iter().zip(&scores.fairness) {
        println!("fairness {u:>6}: {f:.3}");
    }

    let (labels, buckets) = bucketize_labels(&weights, 3)?;
    println!("label bounds: {:?}", buckets.bounds);
    for e in hypergraph.edges() {
        let item = graph.v_ids.name(e.source.unwrap());
        println!("{item:>10}: weight {:+.3}, label {}", weights.get(e.id).unwrap(), labels.label(e.id).unwrap());
    }
    Ok(())
}
