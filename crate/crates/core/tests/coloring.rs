use std::collections::BTreeSet;

use ffverify::graph::MatchingCover;
use ffverify::{generators, Hypergraph, Vertex};
use proptest::prelude::*;

fn simple_graph() -> impl Strategy<Value = Hypergraph> {
    (3u32..10)
        .prop_flat_map(|n| {
            let pairs: Vec<(Vertex, Vertex)> = (0..n)
                .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
                .collect();
            let len = pairs.len();
            proptest::sample::subsequence(pairs, 1..=len)
        })
        .prop_map(|pairs| Hypergraph::from_pairs(&pairs).unwrap())
}

fn hypergraph() -> impl Strategy<Value = Hypergraph> {
    proptest::collection::vec(
        proptest::sample::subsequence((0..7).collect::<Vec<Vertex>>(), 2..=3),
        1..10,
    )
    .prop_filter_map("duplicate edges", |edges| {
        let set: BTreeSet<_> = edges.iter().cloned().collect();
        let edges: Vec<_> = set.into_iter().collect();
        let verts: BTreeSet<Vertex> = edges.iter().flatten().copied().collect();
        Hypergraph::new(verts.into_iter().collect(), edges).ok()
    })
}

fn assert_partition(g: &Hypergraph, c: &MatchingCover<f64>) {
    let mut seen = vec![0usize; g.edge_count()];
    for m in c.matchings() {
        assert!(g.is_matching(m).unwrap());
        for &e in m {
            seen[e] += 1;
        }
    }
    assert!(seen.iter().all(|&k| k == 1), "not a partition: {seen:?}");
    assert!(c.is_coloring());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn simple_graph_coloring_uses_at_most_delta_plus_one(g in simple_graph()) {
        let c = g.edge_coloring::<f64>().unwrap();
        assert_partition(&g, &c);
        prop_assert!(c.len() <= g.max_degree() + 1);
        prop_assert!(c.len() >= g.max_degree());
        prop_assert!(c.is_uniform());
    }

    #[test]
    fn hypergraph_coloring_is_a_partition(g in hypergraph()) {
        let c = g.edge_coloring::<f64>().unwrap();
        assert_partition(&g, &c);
        let incidence = g
            .vertices()
            .iter()
            .map(|v| g.edges().iter().filter(|e| e.contains(v)).count())
            .max()
            .unwrap();
        prop_assert!(c.len() >= incidence);
    }

    #[test]
    fn proportional_probabilities_follow_sizes(g in simple_graph()) {
        let c = g.edge_coloring::<f64>().unwrap().to_proportional(&g).unwrap();
        prop_assert!(c.is_proportional(&g));
        let total: f64 = c.probabilities().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjointified_cover_is_a_coloring(g in simple_graph(), extra in 0usize..4) {
        let base = g.edge_coloring::<f64>().unwrap();
        let mut matchings = base.matchings().to_vec();
        // Duplicate single edges into extra matchings so the cover overlaps.
        for k in 0..extra.min(g.edge_count()) {
            matchings.push(vec![k]);
        }
        let cover = MatchingCover::uniform(&g, matchings).unwrap();
        let d = cover.disjointify(&g).unwrap();
        assert_partition(&g, &d);
    }
}

#[test]
fn bipartite_lattices_need_delta_colors() {
    for g in [
        generators::chain(8, true).unwrap(),
        generators::square(4, 4, (true, true)).unwrap(),
        generators::honeycomb(4, 4, (true, true)).unwrap(),
    ] {
        assert_eq!(g.edge_coloring::<f64>().unwrap().len(), g.max_degree());
    }
    assert_eq!(
        generators::chain(5, true)
            .unwrap()
            .edge_coloring::<f64>()
            .unwrap()
            .len(),
        3
    );
}
