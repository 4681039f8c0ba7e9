//! Embedded kNN: each hyperedge becomes the per-label tally of its refined
//! neighborhood, then classical Euclidean kNN runs on those points.

use hyperknn::geometry::{Geometry, GeometryConfig, HPolicy, Query, SizePolicy};
use hyperknn::hypergraph::{EdgeId, Hypergraph, IncidenceIndex, VertexId};
use hyperknn::observation::ObservationMap;
use hyperknn::predictors::{embed, predict_label_embedded, FeatureSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> hyperknn::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let q = 2;
    let mut sets = Vec::new();
    let mut truth = Vec::new();
    // label follows the vertex block the hyperedge lives in
    for _ in 0..60 {
        let block = rng.gen_range(0..2u32);
        let mut set: Vec<u32> = (0..5).map(|_| block * 8 + rng.gen_range(0..8)).collect();
        set.sort_unstable();
        set.dedup();
        sets.push(set);
        truth.push(block + 1);
    }
    let hypergraph = Hypergraph::from_vertex_sets(16, sets);
    let index = IncidenceIndex::build(&hypergraph);
    let labels = ObservationMap::labels(60, q, (0..50u32).map(|i| (EdgeId(i), truth[i as usize])))?;

    let config = GeometryConfig::new(SizePolicy::epsilon(5.0 / 3.0)?, HPolicy::StdDevOfNeighborhood)?;
    let geometry = Geometry::new(&hypergraph, &index, &labels, config);
    let space = FeatureSpace::from_geometry(&geometry, &labels)?;
    println!("{} training points in R^{}", space.len(), space.q());

    let mut correct = 0;
    for e in (50..60).map(EdgeId) {
        let (point, _) = embed(&geometry, Query::edge(&hypergraph, e), &labels)?;
        let predicted = predict_label_embedded(&space, &point, &labels, 3)?;
        correct += (predicted == truth[e.index()]) as usize;
        println!("edge {e}: T(e) = {:?} -> label {predicted} (truth {})", point.components, truth[e.index()]);
    }
    println!("{correct}/10 correct");

    // an ad-hoc hyperedge given by its vertices
    let query: Vec<VertexId> = [9, 10, 12, 14].map(VertexId).to_vec();
    let (point, rec) = embed(&geometry, Query::vertices(&query), &labels)?;
    println!(
        "query {{9,10,12,14}}: C = {}, T = {:?} -> label {}",
        rec.count,
        point.components,
        predict_label_embedded(&space, &point, &labels, 3)?
    );
    Ok(())
}
