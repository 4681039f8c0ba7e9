//! Modified kNN: neighbors are whole distance shells on the count line.

use hyperknn::geometry::{Geometry, GeometryConfig};
use hyperknn::hypergraph::{EdgeId, Hypergraph, IncidenceIndex};
use hyperknn::observation::ObservationMap;
use hyperknn::predictors::{knn_shells, predict_label_modified, predict_weight_modified};
use hyperknn::weighting::bucketize_labels;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> hyperknn::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // three clusters of overlapping hyperedges with different weight levels
    let mut sets = Vec::new();
    let mut observed = Vec::new();
    for (cluster, level) in [(0u32, -0.6), (1, 0.1), (2, 0.7)] {
        for _ in 0..(8 + 6 * cluster) {
            let mut set: Vec<u32> = (0..4).map(|_| cluster * 10 + rng.gen_range(0..6)).collect();
            set.sort_unstable();
            set.dedup();
            observed.push(level + rng.gen_range(-0.1..0.1));
            sets.push(set);
        }
    }
    let n = sets.len();
    let hypergraph = Hypergraph::from_vertex_sets(30, sets);
    let index = IncidenceIndex::build(&hypergraph);
    // hide every fifth hyperedge
    let weights = ObservationMap::weights(
        n,
        -1.0,
        1.0,
        observed.iter().enumerate().filter(|(i, _)| i % 5 != 0).map(|(i, &w)| (EdgeId(i as u32), w)),
    )?;
    let (labels, _) = bucketize_labels(&weights, 3)?;

    let geometry = Geometry::new(&hypergraph, &index, &weights, GeometryConfig::default());
    let label_geometry = Geometry::new(&hypergraph, &index, &labels, GeometryConfig::default());
    for e in (0..n).step_by(5).map(|i| EdgeId(i as u32)) {
        let c = geometry.count(e);
        let shells = knn_shells(c, &weights, geometry.counts(), 2)?;
        let w = predict_weight_modified(c, &weights, geometry.counts(), 2)?;
        let l = predict_label_modified(label_geometry.count(e), &labels, label_geometry.counts(), 2)?;
        println!(
            "edge {e:>2}: C = {c:>2}, shells {:?} ({} members), predicted {w:+.3} / label {l}, truth {:+.3}",
            shells.shells,
            shells.members.len(),
            observed[e.index()]
        );
    }
    Ok(())
}
