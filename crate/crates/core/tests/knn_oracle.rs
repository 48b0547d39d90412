//! Exact search against an exhaustive-scan oracle, plus ranking and
//! condensing invariants.

use proptest::prelude::*;
use srctrace_core::knn::{
    self, build_index, condense, consistency_failures, SupportIndex, Workers,
};
use srctrace_core::rng::SplitRng;
use srctrace_core::store::{build_corpus, ClassMap, EmbeddingSet, LabelTarget, SampleRecord};

/// Sorts every support row by (sequentially summed squared distance, position).
fn oracle(support: &[f32], dim: usize, q: &[f32], k: usize) -> Vec<usize> {
    let mut all: Vec<(f64, usize)> = support
        .chunks_exact(dim)
        .enumerate()
        .map(|(i, row)| {
            let mut s = 0.0f64;
            for (a, b) in row.iter().zip(q) {
                let d = *a as f64 - *b as f64;
                s += d * d;
            }
            (s, i)
        })
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.into_iter().take(k).map(|x| x.1).collect()
}

fn random_index(n: usize, dim: usize, classes: u32, seed: u64) -> SupportIndex {
    let mut rng = SplitRng::new(seed);
    let vectors: Vec<f32> = (0..n * dim).map(|_| rng.normal() as f32).collect();
    let class_of: Vec<u32> = (0..n).map(|_| rng.below(classes as u64) as u32).collect();
    let names: Vec<String> = (0..classes).map(|c| format!("c{c:02}")).collect();
    SupportIndex::from_parts(
        dim,
        vectors,
        class_of,
        (0..n).map(|i| i.to_string()).collect(),
        ClassMap::from_labels(names.iter().map(String::as_str)),
    )
    .unwrap()
}

#[test]
fn thousand_support_hundred_queries() {
    let idx = random_index(1000, 16, 5, 7);
    let mut rng = SplitRng::new(7 ^ 0xABCD);
    let queries: Vec<f32> = (0..100 * 16).map(|_| rng.normal() as f32).collect();
    for k in [1, 5, 21] {
        let batch = knn::query_batch(&idx, &queries, k, Workers::Auto).unwrap();
        for (qi, q) in queries.chunks_exact(16).enumerate() {
            let expect = oracle(idx.vectors(), 16, q, k);
            assert_eq!(knn::query(&idx, q, k).unwrap().indices, expect);
            assert_eq!(batch[qi].indices, expect);
        }
    }
}

#[test]
fn duplicated_rows_keep_position_order() {
    let base = random_index(50, 4, 3, 1);
    let mut vectors = base.vectors().to_vec();
    vectors.extend_from_slice(base.vectors());
    let idx = SupportIndex::from_parts(
        4,
        vectors,
        [base.labels(), base.labels()].concat(),
        (0..100).map(|i| i.to_string()).collect(),
        base.classes().clone(),
    )
    .unwrap();
    for p in 0..50 {
        let got = knn::query(&idx, idx.vector(p), 2).unwrap();
        assert_eq!(got.indices, [p, p + 50]);
        assert_eq!(got.distances, [0.0, 0.0]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn matches_oracle(n in 1usize..400, dim in 1usize..40, seed in any::<u64>(), k_frac in 0.0f64..1.0) {
        let idx = random_index(n, dim, 4, seed);
        let k = 1 + ((n - 1) as f64 * k_frac) as usize;
        let mut rng = SplitRng::new(seed.wrapping_add(1));
        let q: Vec<f32> = (0..dim).map(|_| rng.normal() as f32).collect();
        let got = knn::query(&idx, &q, k).unwrap();
        prop_assert_eq!(&got.indices, &oracle(idx.vectors(), dim, &q, k));
        prop_assert!(got.distances.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(got.distances.iter().all(|d| *d >= 0.0));
    }

    #[test]
    fn scaling_keeps_ranking(seed in any::<u64>(), c in prop::sample::select(vec![0.25f32, 0.5, 2.0, 4.0, 8.0])) {
        // Power-of-two factors scale binary32 values exactly, so the ranking
        // must be identical, ties included.
        let idx = random_index(120, 6, 3, seed);
        let scaled = SupportIndex::from_parts(
            6,
            idx.vectors().iter().map(|v| v * c).collect(),
            idx.labels().to_vec(),
            idx.sample_ids().to_vec(),
            idx.classes().clone(),
        ).unwrap();
        let mut rng = SplitRng::new(seed ^ 5);
        let q: Vec<f32> = (0..6).map(|_| rng.normal() as f32).collect();
        let qs: Vec<f32> = q.iter().map(|v| v * c).collect();
        prop_assert_eq!(knn::query(&idx, &q, 21).unwrap().indices, knn::query(&scaled, &qs, 21).unwrap().indices);
    }

    #[test]
    fn vote_picks_a_neighbour_class(seed in any::<u64>(), k in 1usize..30) {
        let idx = random_index(60, 5, 6, seed);
        let mut rng = SplitRng::new(seed ^ 9);
        let q: Vec<f32> = (0..5).map(|_| rng.normal() as f32).collect();
        let n = knn::query(&idx, &q, k).unwrap();
        let v = knn::vote(&idx, &n);
        prop_assert!(n.indices.iter().any(|&p| idx.class_of(p) == v.predicted_class));
        prop_assert_eq!(v.histogram.values().sum::<usize>(), k);
        let best = *v.histogram.values().max().unwrap();
        prop_assert_eq!(v.histogram[&v.predicted_class], best);
    }

    #[test]
    fn condensed_set_is_consistent(seed in any::<u64>(), classes in 1u32..5) {
        let idx = random_index(150, 3, classes, seed);
        let reduced = condense(&idx, seed);
        prop_assert!(reduced.len() <= idx.len());
        prop_assert!(consistency_failures(&idx, &reduced).is_empty());
        // Independent 1-NN check with the oracle.
        for p in 0..idx.len() {
            let nn = oracle(reduced.vectors(), 3, idx.vector(p), 1)[0];
            prop_assert_eq!(reduced.class_of(nn), idx.class_of(p));
        }
    }
}

#[test]
fn symmetric_distance_and_zero_self() {
    let mut rng = SplitRng::new(3);
    for _ in 0..200 {
        let a: Vec<f32> = (0..64).map(|_| rng.normal() as f32 * 10.0).collect();
        let b: Vec<f32> = (0..64).map(|_| rng.normal() as f32 * 10.0).collect();
        assert_eq!(knn::squared_euclidean(&a, &a), 0.0);
        assert_eq!(
            knn::squared_euclidean(&a, &b),
            knn::squared_euclidean(&b, &a)
        );
    }
}

#[test]
fn index_over_corpus_selection() {
    let recs: Vec<SampleRecord> = (0..10)
        .map(|i| SampleRecord::new(format!("s{i}"), "d", ["a", "b"][i % 2]))
        .collect();
    let emb = EmbeddingSet::new("x", 0, 2, (0..20).map(|v| v as f32).collect()).unwrap();
    let c = build_corpus(recs, emb, LabelTarget::checkpoint()).unwrap();
    let idx = build_index(&c, Some(&[9, 2, 4, 6])).unwrap();
    assert_eq!(idx.len(), 4);
    assert_eq!(idx.sample_ids(), ["s9", "s2", "s4", "s6"]);
    assert_eq!(idx.labels(), [1, 0, 0, 0]);
}
