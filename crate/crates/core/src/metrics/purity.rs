use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::knn::{SupportIndex, Workers};

/// Where the k nearest neighbours of each class's samples come from.
///
/// `fraction[i][j]` is the share of neighbours of class-`i` samples that
/// belong to class `j`. Rows sum to one; the diagonal is stored and may be
/// masked when rendering. The matrix is generally not symmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborPurityMatrix {
    pub classes: Vec<String>,
    pub k: usize,
    pub samples: Vec<usize>,
    pub counts: Vec<Vec<u64>>,
    pub fraction: Vec<Vec<f64>>,
}

impl NeighborPurityMatrix {
    fn from_counts(
        classes: Vec<String>,
        k: usize,
        samples: Vec<usize>,
        counts: Vec<Vec<u64>>,
    ) -> Self {
        let fraction = counts
            .iter()
            .zip(&samples)
            .map(|(row, &n)| row.iter().map(|&c| c as f64 / (k * n) as f64).collect())
            .collect();
        Self {
            classes,
            k,
            samples,
            counts,
            fraction,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Share of a class's neighbours that come from other classes.
    pub fn non_target(&self, class: usize) -> f64 {
        1.0 - self.fraction[class][class]
    }

    /// Pools classes into coarser groups (e.g. datasets). `group_of[i]` names
    /// the group of class `i`; groups are sorted by name.
    pub fn grouped(&self, group_of: &[String]) -> NeighborPurityMatrix {
        let mut names: Vec<String> = group_of.to_vec();
        names.sort();
        names.dedup();
        let gi: Vec<usize> = group_of
            .iter()
            .map(|g| names.binary_search(g).expect("group listed"))
            .collect();
        let mut samples = vec![0; names.len()];
        let mut counts = vec![vec![0u64; names.len()]; names.len()];
        for (i, row) in self.counts.iter().enumerate() {
            samples[gi[i]] += self.samples[i];
            for (j, &c) in row.iter().enumerate() {
                counts[gi[i]][gi[j]] += c;
            }
        }
        Self::from_counts(names, self.k, samples, counts)
    }
}

/// Neighbour-class fractions over the whole index, each sample excluded
/// from its own neighbourhood. Only classes with support samples appear.
pub fn neighbor_purity(
    index: &SupportIndex,
    k: usize,
    workers: Workers,
) -> Result<NeighborPurityMatrix, MetricsError> {
    if k == 0 || k >= index.len() {
        return Err(MetricsError::Range(format!(
            "k = {k} needs 1 <= k < {} support samples",
            index.len()
        )));
    }
    let mut present: Vec<u32> = index.labels().to_vec();
    present.sort_unstable();
    present.dedup();
    let mut row_of = vec![usize::MAX; index.classes().len()];
    for (i, &c) in present.iter().enumerate() {
        row_of[c as usize] = i;
    }

    // k + 1 neighbours, then drop the sample itself (or the farthest one if
    // duplicates at lower positions pushed it out).
    let lists = index.query_many_unchecked(index.vectors(), k + 1, workers);
    let m = present.len();
    let mut samples = vec![0usize; m];
    let mut counts = vec![vec![0u64; m]; m];
    for (pos, mut list) in lists.into_iter().enumerate() {
        match list.indices.iter().position(|&p| p == pos) {
            Some(at) => {
                list.indices.remove(at);
            }
            None => {
                list.indices.pop();
            }
        }
        let src = row_of[index.class_of(pos) as usize];
        samples[src] += 1;
        for &nb in &list.indices {
            counts[src][row_of[index.class_of(nb) as usize]] += 1;
        }
    }
    let classes = present
        .iter()
        .map(|&c| index.classes().name(c).to_string())
        .collect();
    Ok(NeighborPurityMatrix::from_counts(
        classes, k, samples, counts,
    ))
}
