//! Held-out grid search over `k = 1..20` and the size-control constants on
//! synthetic ratings with planted item quality.

use hyperknn::bipartite::{parse_bipartite_edges, Schema};
use hyperknn::evaluation::{grid_search, GridSpec, Method, Protocol, SplitSpec, Task};
use hyperknn::hypergraph::{induce_hypergraph, IncidenceIndex};
use hyperknn::weighting::{bucketize_labels, goodness_weights};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn synthetic_ratings(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    let mut item = 0;
    for (group, level) in [1.8, 4.2, 3.0, 2.4].into_iter().enumerate() {
        for _ in 0..(15 + 10 * group) {
            for u in 0..60 {
                if rng.gen_bool(0.5) {
                    let r: f64 = (level + rng.gen_range(-1.0..1.0f64)).round().clamp(1.0, 5.0);
                    out += &format!("user{}\titem{item}\t{r}\n", group * 60 + u);
                }
            }
            item += 1;
        }
    }
    out
}

fn main() -> hyperknn::Result<()> {
    let ingested = parse_bipartite_edges(synthetic_ratings(5).as_bytes(), &Schema::default())?;
    let hypergraph = induce_hypergraph(&ingested.graph);
    let index = IncidenceIndex::build(&hypergraph);
    let (weights, _) = goodness_weights(&ingested.graph, &hypergraph, 1e-6, 100)?;
    let (labels, _) = bucketize_labels(&weights, 2)?;

    for (task, method) in
        [(Task::Weight, Method::Modified), (Task::Weight, Method::Embedded), (Task::Label, Method::Modified)]
    {
        for protocol in [Protocol::Paper, Protocol::Validation] {
            let spec = GridSpec {
                task,
                method,
                protocol,
                split: SplitSpec { holdout_fraction: 0.2, seed: 11 },
                ..GridSpec::default()
            };
            let target = if task == Task::Weight { &weights } else { &labels };
            let result = grid_search(&hypergraph, &index, target, &spec)?;
            let eps = result.best.epsilon.map_or("inf".to_owned(), |e| format!("{e:.3}"));
            println!(
                "{task:?}/{method:?}/{protocol:?}: {} cells, best k = {}, eps = {eps}, held-out {} = {:.4}",
                result.rows.len(),
                result.best.k,
                if task == Task::Weight { "MAE" } else { "error" },
                result.best_test.criterion()
            );
        }
    }
    Ok(())
}
