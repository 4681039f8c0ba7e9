//! Parse a rating edge list and print the shape of the induced hypergraph.
//!
//!     cargo run --example ingest_stats -- ratings.tsv
//!
//! Without an argument a small built-in list is used.

use std::fs::File;
use std::io::BufReader;

use hyperknn::bipartite::{parse_bipartite_edges, Schema};
use hyperknn::hypergraph::induce_hypergraph;
use hyperknn::report::DatasetStats;

const SAMPLE: &str = "\
# user item rating
alice\tdune\t5
bob\tdune\t4
carol\tdune\t4
alice\tsolaris\t2
dave\tsolaris\t1
bob\tstalker\t5
not a rating line
";

fn main() -> hyperknn::Result<()> {
    let schema = Schema::default();
    let ingested = match std::env::args().nth(1) {
        Some(path) => parse_bipartite_edges(BufReader::new(File::open(path)?), &schema)?,
        None => parse_bipartite_edges(SAMPLE.as_bytes(), &schema)?,
    };
    let hypergraph = induce_hypergraph(&ingested.graph);
    let stats = DatasetStats::of(&hypergraph);

    println!("ratings:     {}", ingested.graph.edges.len());
    println!("malformed:   {}", ingested.malformed);
    println!("duplicates:  {}", ingested.duplicates);
    println!("hyperedges:  {}", stats.hyperedges);
    println!("vertices:    {}", stats.vertices);
    println!("sizes:       [{}, {}]", stats.min_size, stats.max_size);

    for e in hypergraph.edges().iter().take(10) {
        let item = ingested.graph.v_ids.name(e.source.unwrap());
        let raters: Vec<&str> = e.vertices.iter().map(|&u| ingested.graph.u_ids.name(u)).collect();
        println!("  {item}: {{{}}}", raters.join(", "));
    }
    Ok(())
}
