use std::collections::BTreeMap;

use super::{KnnError, NeighborList, SupportIndex, Workers};

/// Outcome of an unweighted majority vote among k neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteResult {
    pub predicted_class: u32,
    /// Neighbour count per class; counts sum to k.
    pub histogram: BTreeMap<u32, usize>,
    /// Mean of the k true Euclidean distances.
    pub mean_distance: f64,
}

/// Majority vote over a neighbour list.
///
/// Ties on count go to the class whose tied neighbours have the smaller
/// summed distance, then to the lower class index.
pub fn vote(index: &SupportIndex, neighbors: &NeighborList) -> VoteResult {
    let mut tally: BTreeMap<u32, (usize, f64)> = BTreeMap::new();
    for (&pos, &d) in neighbors.indices.iter().zip(&neighbors.distances) {
        let e = tally.entry(index.class_of(pos)).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += d;
    }
    let (&predicted_class, _) = tally
        .iter()
        .min_by(|(ca, (na, sa)), (cb, (nb, sb))| nb.cmp(na).then(sa.total_cmp(sb)).then(ca.cmp(cb)))
        .expect("k >= 1");
    VoteResult {
        predicted_class,
        histogram: tally.into_iter().map(|(c, (n, _))| (c, n)).collect(),
        mean_distance: neighbors.mean_distance(),
    }
}

pub fn classify(index: &SupportIndex, vector: &[f32], k: usize) -> Result<VoteResult, KnnError> {
    let n = super::query(index, vector, k)?;
    Ok(vote(index, &n))
}

/// Classifies every row of the row-major `queries`. Output order matches
/// input order for any worker setting.
pub fn classify_batch(
    index: &SupportIndex,
    queries: &[f32],
    k: usize,
    workers: Workers,
) -> Result<Vec<VoteResult>, KnnError> {
    let lists = super::query_batch(index, queries, k, workers)?;
    Ok(lists.iter().map(|n| vote(index, n)).collect())
}
