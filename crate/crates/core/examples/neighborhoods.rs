//! Neighborhoods, counts and the induced distance on a small hand-built
//! hypergraph. Two unobserved hyperedges end up at distance zero.

use hyperknn::geometry::{Geometry, GeometryConfig, HPolicy, SizePolicy};
use hyperknn::hypergraph::{EdgeId, Hypergraph, IncidenceIndex};
use hyperknn::observation::ObservationMap;

fn main() -> hyperknn::Result<()> {
    let names = ["a", "b", "c", "d", "g", "h", "e", "f"];
    let sets: [&[u32]; 8] = [&[1, 10], &[2, 11], &[4, 13], &[5, 14], &[3, 12], &[6, 15], &[1, 2, 3], &[4, 5, 6]];
    let observed = [0.4, 0.5, 0.35, 0.46, -0.2, -0.15];

    let hypergraph = Hypergraph::from_vertex_sets(16, sets.iter().map(|s| s.iter().copied()));
    let index = IncidenceIndex::build(&hypergraph);
    let weights =
        ObservationMap::weights(8, -1.0, 1.0, observed.iter().enumerate().map(|(i, &w)| (EdgeId(i as u32), w)))?;

    for policy in [SizePolicy::Infinite, SizePolicy::epsilon(4.0 / 3.0)?, SizePolicy::epsilon(0.5)?] {
        let config = GeometryConfig::new(policy, HPolicy::StdDevOfNeighborhood)?;
        let geometry = Geometry::new(&hypergraph, &index, &weights, config);
        println!("size policy M = {policy}");
        for rec in geometry.records() {
            let e = rec.edge.unwrap().index();
            let base: Vec<&str> = rec.base.iter().map(|f| names[f.index()]).collect();
            let refined: Vec<&str> = rec.refined.iter().map(|f| names[f.index()]).collect();
            println!(
                "  {}: base {:?} avg {} h {} refined {:?} C = {}",
                names[e],
                base,
                rec.avg.map_or("-".into(), |x| format!("{x:.3}")),
                rec.h.map_or("-".into(), |x| format!("{x:.3}")),
                refined,
                rec.count
            );
        }
        let (e, f) = (EdgeId(6), EdgeId(7));
        println!("  D(e, f) = {}, e ≅ f: {}", geometry.distance(e, f), geometry.equivalent(e, f));
    }
    Ok(())
}
