mod common;

use common::*;
use hyperknn::geometry::{base_neighborhood, hyperedge_distance, Geometry, GeometryConfig, HPolicy, Query, SizePolicy};
use hyperknn::hypergraph::{intersection_size, EdgeId, Hypergraph, IncidenceIndex};
use hyperknn::observation::ObservationMap;
use hyperknn::predictors::{knn_shells, predict_label_modified, predict_weight_modified};
use hyperknn::weighting::bucketize_labels;
use proptest::prelude::*;

fn instance(seed: u64) -> Instance {
    random_instance(&mut rng(seed), &InstanceShape::default())
}

fn geometry_counts(inst: &Instance, policy: SizePolicy) -> Vec<usize> {
    let config = GeometryConfig::new(policy, HPolicy::StdDevOfNeighborhood).unwrap();
    Geometry::new(&inst.hypergraph, &inst.index, &inst.weights, config).counts().to_vec()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn distance_is_a_metric_modulo_equivalence(seed in any::<u64>()) {
        let inst = instance(seed);
        let c = geometry_counts(&inst, SizePolicy::Infinite);
        let n = c.len();
        for a in 0..n {
            for b in 0..n {
                let dab = hyperedge_distance(c[a], c[b]);
                prop_assert_eq!(dab, hyperedge_distance(c[b], c[a]));
                prop_assert_eq!(dab == 0, c[a] == c[b]);
                for g in (0..n).step_by(3) {
                    prop_assert!(hyperedge_distance(c[a], c[g]) <= dab + hyperedge_distance(c[b], c[g]));
                }
            }
        }
    }

    #[test]
    fn intersection_is_symmetric_and_bounded(seed in any::<u64>()) {
        let inst = instance(seed);
        let hg = &inst.hypergraph;
        for e in hg.edges() {
            for f in hg.edges() {
                let i = intersection_size(&e.vertices, &f.vertices);
                prop_assert_eq!(i, intersection_size(&f.vertices, &e.vertices));
                prop_assert!(i <= e.size().min(f.size()));
            }
        }
    }

    #[test]
    fn incidence_index_is_the_inverse_incidence(seed in any::<u64>()) {
        let inst = instance(seed);
        let hg = &inst.hypergraph;
        for v in 0..hg.vertex_count() as u32 {
            let v = hyperknn::hypergraph::VertexId(v);
            for e in hg.edges() {
                prop_assert_eq!(inst.index.edges_of(v).contains(&e.id), e.vertices.contains(&v));
            }
        }
    }

    #[test]
    fn tighter_size_policies_shrink_the_base(seed in any::<u64>(), e1 in 0.05f64..=2.0, e2 in 0.05f64..=2.0) {
        let inst = instance(seed);
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        for e in inst.hypergraph.edge_ids() {
            let q = Query::edge(&inst.hypergraph, e);
            let base = |p| base_neighborhood(&inst.hypergraph, &inst.index, q, &inst.weights, p);
            let small = base(SizePolicy::epsilon(lo).unwrap());
            let mid = base(SizePolicy::epsilon(hi).unwrap());
            let all = base(SizePolicy::Infinite);
            prop_assert!(small.iter().all(|f| mid.contains(f)));
            prop_assert!(mid.iter().all(|f| all.contains(f)));
        }
    }

    #[test]
    fn refinement_stays_inside_the_base(seed in any::<u64>()) {
        let inst = instance(seed);
        let geometry = Geometry::new(&inst.hypergraph, &inst.index, &inst.weights, GeometryConfig::default());
        for rec in geometry.records() {
            prop_assert!(rec.refined.iter().all(|f| rec.base.contains(f)));
            prop_assert!(rec.base.iter().all(|&f| inst.weights.contains(f)));
            prop_assert!(!rec.base.contains(&rec.edge.unwrap()));
            prop_assert_eq!(rec.count, rec.refined.len());
            prop_assert_eq!(rec.avg.is_some(), !rec.base.is_empty());
        }
    }

    #[test]
    fn size_policies_coincide_when_no_edge_is_large(seed in any::<u64>(), size in 1usize..5) {
        // every hyperedge has the same size, so s(f) ≤ 1·s(e) always holds
        let mut r = rng(seed);
        let nv = 12;
        let sets: Vec<Vec<u32>> = (0..30)
            .map(|_| {
                let mut s: Vec<u32> = rand::seq::index::sample(&mut r, nv, size).into_iter().map(|v| v as u32).collect();
                s.sort_unstable();
                s
            })
            .collect();
        let hg = Hypergraph::from_vertex_sets(nv, sets);
        let index = IncidenceIndex::build(&hg);
        let w = ObservationMap::weights(30, -1.0, 1.0, (0..30u32).filter(|i| i % 3 != 0).map(|i| (EdgeId(i), (i % 7) as f64 / 7.0))).unwrap();
        let bounded = Geometry::new(&hg, &index, &w, GeometryConfig::new(SizePolicy::epsilon(1.0).unwrap(), HPolicy::StdDevOfNeighborhood).unwrap());
        let unbounded = Geometry::new(&hg, &index, &w, GeometryConfig::default());
        prop_assert_eq!(bounded.records(), unbounded.records());
    }

    #[test]
    fn shells_separate_members_from_the_rest(seed in any::<u64>(), k in 1usize..8) {
        let inst = instance(seed);
        prop_assume!(!inst.weights.is_empty());
        let counts = geometry_counts(&inst, SizePolicy::Infinite);
        for e in inst.hypergraph.edge_ids() {
            let c = counts[e.index()];
            let s = knn_shells(c, &inst.weights, &counts, k).unwrap();
            prop_assert!(s.shells.len() <= k);
            prop_assert!(s.shells.windows(2).all(|w| w[0] < w[1]));
            let worst_member = s.members.iter().map(|&(_, d)| d).max().unwrap();
            for &f in inst.weights.domain() {
                let d = hyperedge_distance(c, counts[f.index()]);
                let member = s.member_ids().any(|m| m == f);
                prop_assert_eq!(member, d <= worst_member);
                if member {
                    prop_assert!(s.shells.contains(&d));
                }
            }
            let p = predict_weight_modified(c, &inst.weights, &counts, k).unwrap();
            let vals: Vec<f64> = s.member_ids().map(|m| inst.weights.get(m).unwrap()).collect();
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(p >= lo - 1e-12 && p <= hi + 1e-12);
            let l = predict_label_modified(c, &inst.labels, &counts, k).unwrap();
            prop_assert!((1..=inst.q).contains(&l));
        }
    }

    #[test]
    fn equivalent_edges_get_equal_predictions(seed in any::<u64>(), k in 1usize..6) {
        let inst = instance(seed);
        let counts = geometry_counts(&inst, SizePolicy::Infinite);
        let ids: Vec<EdgeId> = inst.hypergraph.edge_ids().collect();
        for &a in &ids {
            for &b in &ids {
                if a == b || counts[a.index()] != counts[b.index()] {
                    continue;
                }
                let keep: Vec<EdgeId> = inst.weights.domain().iter().copied().filter(|&f| f != a && f != b).collect();
                let rest = inst.weights.restrict(&keep);
                if rest.is_empty() {
                    continue;
                }
                let sa = knn_shells(counts[a.index()], &rest, &counts, k).unwrap();
                let sb = knn_shells(counts[b.index()], &rest, &counts, k).unwrap();
                prop_assert_eq!(&sa.members, &sb.members);
                prop_assert_eq!(
                    predict_weight_modified(counts[a.index()], &rest, &counts, k).unwrap(),
                    predict_weight_modified(counts[b.index()], &rest, &counts, k).unwrap()
                );
            }
        }
    }

    #[test]
    fn feature_components_sum_to_the_count(seed in any::<u64>()) {
        let inst = instance(seed);
        let geometry = Geometry::new(&inst.hypergraph, &inst.index, &inst.labels, GeometryConfig::default());
        for e in inst.hypergraph.edge_ids() {
            let (fv, rec) = hyperknn::predictors::embed(&geometry, Query::edge(&inst.hypergraph, e), &inst.labels).unwrap();
            prop_assert_eq!(fv.components.iter().sum::<u32>() as usize, geometry.count(e));
            prop_assert_eq!(rec.count, geometry.count(e));
        }
    }

    #[test]
    fn bucketization_is_monotone_and_total(values in prop::collection::vec(-1.0f64..=1.0, 1..80), q in 2u32..8) {
        let map = ObservationMap::weights(values.len(), -1.0, 1.0, values.iter().enumerate().map(|(i, &w)| (EdgeId(i as u32), w))).unwrap();
        let (labels, buckets) = bucketize_labels(&map, q).unwrap();
        for (i, &a) in values.iter().enumerate() {
            let la = labels.label(EdgeId(i as u32)).unwrap();
            prop_assert!((1..=q).contains(&la));
            let hits = (1..=q as usize)
                .filter(|&j| {
                    let (lo, hi) = (buckets.bounds[j - 1], buckets.bounds[j]);
                    if j == 1 { a >= lo && a <= hi } else { a > lo && a <= hi }
                })
                .count();
            if values.iter().any(|&b| b != a) {
                prop_assert_eq!(hits, 1);
            }
            for (j, &b) in values.iter().enumerate() {
                if a <= b {
                    prop_assert!(la <= labels.label(EdgeId(j as u32)).unwrap());
                }
            }
        }
    }
}

#[test]
fn equivalence_is_an_equivalence_relation() {
    let inst = instance(5);
    let geometry = Geometry::new(&inst.hypergraph, &inst.index, &inst.weights, GeometryConfig::default());
    let ids: Vec<EdgeId> = inst.hypergraph.edge_ids().collect();
    for &a in &ids {
        assert!(geometry.equivalent(a, a));
        for &b in &ids {
            assert_eq!(geometry.equivalent(a, b), geometry.equivalent(b, a));
            for &c in &ids {
                if geometry.equivalent(a, b) && geometry.equivalent(b, c) {
                    assert!(geometry.equivalent(a, c));
                }
            }
        }
    }
}

#[test]
fn predictions_do_not_depend_on_thread_count() {
    let inst = instance(77);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| geometry_counts(&inst, SizePolicy::epsilon(1.0).unwrap()))
    };
    assert_eq!(run(1), run(4));
}
