//! Hart's condensed nearest neighbour.

use serde::{Deserialize, Serialize};

use super::{squared_euclidean, SupportIndex};
use crate::rng::SplitRng;

/// How a condensed index was produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CondenseProvenance {
    pub seed: u64,
    pub original_len: usize,
    pub passes: usize,
}

/// Position of the nearest stored vector, ties to the lower support position.
fn nearest_in(index: &SupportIndex, store: &[usize], query: &[f32]) -> usize {
    let mut best = (f64::INFINITY, usize::MAX);
    for &p in store {
        let d = squared_euclidean(query, index.vector(p));
        if d < best.0 || (d == best.0 && p < best.1) {
            best = (d, p);
        }
    }
    best.1
}

/// Reduces `index` to a 1-NN consistent subset.
///
/// Samples are presented in a seeded random order. The first one seeds the
/// store; every sample the current store misclassifies under 1-NN is added,
/// and passes repeat until one adds nothing. The result keeps the original
/// support order, so its 1-NN tie resolution matches the one used while
/// condensing.
///
/// Consistency holds unless two identical vectors carry different classes;
/// [`consistency_failures`] reports any such rows.
pub fn condense(index: &SupportIndex, seed: u64) -> SupportIndex {
    let n = index.len();
    let mut order: Vec<usize> = (0..n).collect();
    SplitRng::new(seed).shuffle(&mut order);

    let mut in_store = vec![false; n];
    let mut store = vec![order[0]];
    in_store[order[0]] = true;
    let mut passes = 0;
    loop {
        passes += 1;
        let mut added = false;
        for &i in &order {
            if in_store[i] {
                continue;
            }
            let nn = nearest_in(index, &store, index.vector(i));
            if index.class_of(nn) != index.class_of(i) {
                store.push(i);
                in_store[i] = true;
                added = true;
            }
        }
        if !added {
            break;
        }
    }

    store.sort_unstable();
    let mut reduced = index.restrict(&store);
    reduced.provenance = Some(CondenseProvenance {
        seed,
        original_len: n,
        passes,
    });
    reduced
}

/// Support positions of `original` that 1-NN over `reduced` assigns to a
/// different class.
pub fn consistency_failures(original: &SupportIndex, reduced: &SupportIndex) -> Vec<usize> {
    let all: Vec<usize> = (0..reduced.len()).collect();
    (0..original.len())
        .filter(|&i| {
            let nn = nearest_in(reduced, &all, original.vector(i));
            reduced.class_of(nn) != original.class_of(i)
        })
        .collect()
}
