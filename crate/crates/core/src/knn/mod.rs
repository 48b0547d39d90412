//! Exact Euclidean k-nearest-neighbour search over a labelled support set.
//!
//! Neighbours are ranked by squared distance (accumulated in binary64) and,
//! at equal distance, by ascending support position. True distances are
//! only formed when reporting.

mod condense;
mod distance;
mod snapshot;
mod vote;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use thiserror::Error;

use crate::store::{ClassMap, Corpus, StoreError};

pub use condense::{condense, consistency_failures, CondenseProvenance};
pub use distance::squared_euclidean;
pub use snapshot::{read_snapshot, write_snapshot};
pub use vote::{classify, classify_batch, vote, VoteResult};

#[derive(Debug, Error)]
pub enum KnnError {
    #[error("support selection is empty")]
    EmptySupport,
    #[error("selection position {position} is out of range for {len} rows")]
    SelectionOutOfRange { position: usize, len: usize },
    #[error("selection position {position} appears twice")]
    DuplicateSelection { position: usize },
    #[error("dimension mismatch: index has {expected}, query has {actual}")]
    Dim { expected: usize, actual: usize },
    #[error("k = {k} is outside 1..={n}")]
    KRange { k: usize, n: usize },
    #[error("query contains a non-finite value")]
    NonFinite,
    #[error("query row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: Box<KnnError>,
    },
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// How many worker threads batch operations may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Workers {
    /// Run on the calling thread.
    Single,
    /// Use rayon's global pool.
    #[default]
    Auto,
    /// Use a dedicated pool of this many threads.
    Fixed(usize),
}

impl Workers {
    pub(crate) fn run<R: Send>(self, job: impl FnOnce(bool) -> R + Send) -> R {
        match self {
            Workers::Single => job(false),
            Workers::Auto => job(true),
            Workers::Fixed(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .expect("thread pool")
                .install(|| job(true)),
        }
    }
}

/// The k nearest support rows of one query, closest first.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    pub indices: Vec<usize>,
    pub distances: Vec<f64>,
}

impl NeighborList {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn mean_distance(&self) -> f64 {
        self.distances.iter().sum::<f64>() / self.distances.len() as f64
    }
}

/// Immutable labelled vector store.
#[derive(Debug, Clone)]
pub struct SupportIndex {
    dim: usize,
    vectors: Vec<f32>,
    class_of: Vec<u32>,
    sample_ids: Vec<String>,
    source_rows: Vec<usize>,
    classes: ClassMap,
    extractor_id: String,
    layer_index: u32,
    provenance: Option<CondenseProvenance>,
}

/// Indexes the selected corpus rows (all rows when `selection` is `None`),
/// keeping their order.
pub fn build_index(corpus: &Corpus, selection: Option<&[usize]>) -> Result<SupportIndex, KnnError> {
    let rows: Vec<usize> = match selection {
        Some(sel) => {
            let mut seen = vec![false; corpus.len()];
            for &p in sel {
                if p >= corpus.len() {
                    return Err(KnnError::SelectionOutOfRange {
                        position: p,
                        len: corpus.len(),
                    });
                }
                if std::mem::replace(&mut seen[p], true) {
                    return Err(KnnError::DuplicateSelection { position: p });
                }
            }
            sel.to_vec()
        }
        None => (0..corpus.len()).collect(),
    };
    if rows.is_empty() {
        return Err(KnnError::EmptySupport);
    }
    let emb = corpus.embeddings();
    let mut vectors = Vec::with_capacity(rows.len() * emb.dim());
    for &r in &rows {
        vectors.extend_from_slice(emb.row(r));
    }
    Ok(SupportIndex {
        dim: emb.dim(),
        vectors,
        class_of: rows.iter().map(|&r| corpus.label(r)).collect(),
        sample_ids: rows
            .iter()
            .map(|&r| corpus.record(r).sample_id.clone())
            .collect(),
        source_rows: rows,
        classes: corpus.classes().clone(),
        extractor_id: emb.extractor_id().to_string(),
        layer_index: emb.layer_index(),
        provenance: None,
    })
}

impl SupportIndex {
    /// Assembles an index from raw parts. Vectors must be finite and
    /// `class_of` entries valid indices into `classes`.
    pub fn from_parts(
        dim: usize,
        vectors: Vec<f32>,
        class_of: Vec<u32>,
        sample_ids: Vec<String>,
        classes: ClassMap,
    ) -> Result<Self, KnnError> {
        if dim == 0 || !vectors.len().is_multiple_of(dim) {
            return Err(KnnError::Dim {
                expected: dim,
                actual: vectors.len(),
            });
        }
        let n = vectors.len() / dim;
        if n == 0 {
            return Err(KnnError::EmptySupport);
        }
        if class_of.len() != n || sample_ids.len() != n {
            return Err(StoreError::Alignment {
                records: class_of.len(),
                rows: n,
            }
            .into());
        }
        if let Some(pos) = vectors.iter().position(|v| !v.is_finite()) {
            return Err(StoreError::Data { row: pos / dim }.into());
        }
        if let Some(&c) = class_of.iter().find(|&&c| c as usize >= classes.len()) {
            return Err(StoreError::Format(format!("class index {c} has no name")).into());
        }
        Ok(Self {
            dim,
            vectors,
            class_of,
            sample_ids,
            source_rows: (0..n).collect(),
            classes,
            extractor_id: String::new(),
            layer_index: 0,
            provenance: None,
        })
    }

    pub fn len(&self) -> usize {
        self.class_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_of.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, pos: usize) -> &[f32] {
        &self.vectors[pos * self.dim..(pos + 1) * self.dim]
    }

    pub fn vectors(&self) -> &[f32] {
        &self.vectors
    }

    pub fn class_of(&self, pos: usize) -> u32 {
        self.class_of[pos]
    }

    pub fn labels(&self) -> &[u32] {
        &self.class_of
    }

    pub fn sample_id(&self, pos: usize) -> &str {
        &self.sample_ids[pos]
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    /// Corpus row each support position was taken from.
    pub fn source_rows(&self) -> &[usize] {
        &self.source_rows
    }

    pub fn classes(&self) -> &ClassMap {
        &self.classes
    }

    pub fn extractor_id(&self) -> &str {
        &self.extractor_id
    }

    pub fn layer_index(&self) -> u32 {
        self.layer_index
    }

    pub fn provenance(&self) -> Option<&CondenseProvenance> {
        self.provenance.as_ref()
    }

    /// Sub-index over the given positions, keeping their order.
    pub(crate) fn restrict(&self, positions: &[usize]) -> SupportIndex {
        let mut vectors = Vec::with_capacity(positions.len() * self.dim);
        for &p in positions {
            vectors.extend_from_slice(self.vector(p));
        }
        SupportIndex {
            dim: self.dim,
            vectors,
            class_of: positions.iter().map(|&p| self.class_of[p]).collect(),
            sample_ids: positions
                .iter()
                .map(|&p| self.sample_ids[p].clone())
                .collect(),
            source_rows: positions.iter().map(|&p| self.source_rows[p]).collect(),
            classes: self.classes.clone(),
            extractor_id: self.extractor_id.clone(),
            layer_index: self.layer_index,
            provenance: None,
        }
    }

    pub(crate) fn check_query(&self, query: &[f32], k: usize) -> Result<(), KnnError> {
        if query.len() != self.dim {
            return Err(KnnError::Dim {
                expected: self.dim,
                actual: query.len(),
            });
        }
        if k == 0 || k > self.len() {
            return Err(KnnError::KRange { k, n: self.len() });
        }
        if query.iter().any(|v| !v.is_finite()) {
            return Err(KnnError::NonFinite);
        }
        Ok(())
    }

    fn check_batch(&self, queries: &[f32], k: usize) -> Result<usize, KnnError> {
        if !queries.len().is_multiple_of(self.dim) {
            return Err(KnnError::Dim {
                expected: self.dim,
                actual: queries.len() % self.dim,
            });
        }
        if k == 0 || k > self.len() {
            return Err(KnnError::KRange { k, n: self.len() });
        }
        for (row, q) in queries.chunks_exact(self.dim).enumerate() {
            if q.iter().any(|v| !v.is_finite()) {
                return Err(KnnError::Row {
                    row,
                    source: Box::new(KnnError::NonFinite),
                });
            }
        }
        Ok(queries.len() / self.dim)
    }
}

/// Candidate ordered by (squared distance, support position).
#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    dist2: f64,
    pos: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.pos.cmp(&other.pos))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const LINEAR_TOP_K: usize = 32;

/// Bounded best-k collector. Candidates must be offered in ascending
/// position order, so an incoming candidate that ties the current worst is
/// always worse and can be dropped.
enum TopK {
    Linear(Vec<Candidate>, usize),
    Heap(BinaryHeap<Candidate>, usize),
}

impl TopK {
    fn new(k: usize) -> Self {
        if k <= LINEAR_TOP_K {
            TopK::Linear(Vec::with_capacity(k + 1), k)
        } else {
            TopK::Heap(BinaryHeap::with_capacity(k + 1), k)
        }
    }

    #[inline]
    fn offer(&mut self, dist2: f64, pos: usize) {
        match self {
            TopK::Linear(v, k) => {
                if v.len() == *k {
                    if dist2 >= v[*k - 1].dist2 {
                        return;
                    }
                    v.pop();
                }
                let at = v.partition_point(|c| c.dist2 <= dist2);
                v.insert(at, Candidate { dist2, pos });
            }
            TopK::Heap(h, k) => {
                if h.len() == *k {
                    if dist2 >= h.peek().expect("non-empty").dist2 {
                        return;
                    }
                    h.pop();
                }
                h.push(Candidate { dist2, pos });
            }
        }
    }

    fn into_sorted(self) -> Vec<Candidate> {
        match self {
            TopK::Linear(v, _) => v,
            TopK::Heap(h, _) => h.into_sorted_vec(),
        }
    }
}

fn finish(cands: Vec<Candidate>) -> NeighborList {
    NeighborList {
        indices: cands.iter().map(|c| c.pos).collect(),
        distances: cands.iter().map(|c| c.dist2.sqrt()).collect(),
    }
}

/// Queries per tile in blocked batch search.
const QUERY_TILE: usize = 8;

impl SupportIndex {
    fn scan(&self, query: &[f32], k: usize, exclude: Option<usize>) -> NeighborList {
        let mut top = TopK::new(k);
        for (pos, row) in self.vectors.chunks_exact(self.dim).enumerate() {
            if Some(pos) == exclude {
                continue;
            }
            top.offer(squared_euclidean(query, row), pos);
        }
        finish(top.into_sorted())
    }

    /// One tile of queries against the whole support set. Each support row
    /// is loaded once and compared against every query in the tile.
    fn scan_tile(&self, tile: &[f32], k: usize) -> Vec<NeighborList> {
        let queries: Vec<&[f32]> = tile.chunks_exact(self.dim).collect();
        let mut tops: Vec<TopK> = queries.iter().map(|_| TopK::new(k)).collect();
        for (pos, row) in self.vectors.chunks_exact(self.dim).enumerate() {
            for (q, top) in queries.iter().zip(tops.iter_mut()) {
                top.offer(squared_euclidean(q, row), pos);
            }
        }
        tops.into_iter().map(|t| finish(t.into_sorted())).collect()
    }

    pub(crate) fn query_many_unchecked(
        &self,
        queries: &[f32],
        k: usize,
        workers: Workers,
    ) -> Vec<NeighborList> {
        let tile = QUERY_TILE * self.dim;
        workers.run(|parallel| {
            if parallel {
                queries
                    .par_chunks(tile)
                    .flat_map_iter(|t| self.scan_tile(t, k))
                    .collect()
            } else {
                queries
                    .chunks(tile)
                    .flat_map(|t| self.scan_tile(t, k))
                    .collect()
            }
        })
    }
}

/// The `k` nearest support rows to `query`.
pub fn query(index: &SupportIndex, query: &[f32], k: usize) -> Result<NeighborList, KnnError> {
    index.check_query(query, k)?;
    Ok(index.scan(query, k, None))
}

/// As [`query`] but never returns support position `exclude`; used when the
/// query is itself a member of the support set.
pub fn query_excluding(
    index: &SupportIndex,
    query: &[f32],
    k: usize,
    exclude: usize,
) -> Result<NeighborList, KnnError> {
    index.check_query(query, k)?;
    if k >= index.len() && exclude < index.len() {
        return Err(KnnError::KRange {
            k,
            n: index.len() - 1,
        });
    }
    Ok(index.scan(query, k, Some(exclude)))
}

/// Neighbour lists for row-major `queries`, in input order.
pub fn query_batch(
    index: &SupportIndex,
    queries: &[f32],
    k: usize,
    workers: Workers,
) -> Result<Vec<NeighborList>, KnnError> {
    index.check_batch(queries, k)?;
    Ok(index.query_many_unchecked(queries, k, workers))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{build_corpus, EmbeddingSet, LabelTarget, SampleRecord};

    pub(crate) fn line_corpus(points: &[f32], ckpts: &[&str]) -> Corpus {
        let records = ckpts
            .iter()
            .enumerate()
            .map(|(i, c)| SampleRecord::new(format!("s{i}"), "d", *c))
            .collect();
        let emb = EmbeddingSet::new("t", 0, 1, points.to_vec()).unwrap();
        build_corpus(records, emb, LabelTarget::checkpoint()).unwrap()
    }

    #[test]
    fn selection_sizes_and_errors() {
        let pts: Vec<f32> = (0..10).map(|v| v as f32).collect();
        let c = line_corpus(&pts, &["a"; 10]);
        assert_eq!(build_index(&c, None).unwrap().len(), 10);
        let idx = build_index(&c, Some(&[7, 1, 3, 5])).unwrap();
        assert_eq!(idx.len(), 4);
        assert_eq!(idx.source_rows(), [7, 1, 3, 5]);
        assert_eq!(idx.vector(0), [7.0]);
        assert!(matches!(
            build_index(&c, Some(&[])),
            Err(KnnError::EmptySupport)
        ));
        assert!(matches!(
            build_index(&c, Some(&[10])),
            Err(KnnError::SelectionOutOfRange {
                position: 10,
                len: 10
            })
        ));
        assert!(matches!(
            build_index(&c, Some(&[1, 1])),
            Err(KnnError::DuplicateSelection { position: 1 })
        ));
    }

    #[test]
    fn self_query_is_zero() {
        let c = line_corpus(&[0.0, 2.0, 5.0], &["a", "b", "c"]);
        let idx = build_index(&c, None).unwrap();
        let n = query(&idx, &[2.0], 1).unwrap();
        assert_eq!(n.indices, [1]);
        assert_eq!(n.distances, [0.0]);
    }

    #[test]
    fn ties_prefer_lower_position() {
        let c = line_corpus(&[1.0, -1.0, 1.0, -1.0], &["a", "b", "c", "d"]);
        let idx = build_index(&c, None).unwrap();
        assert_eq!(query(&idx, &[0.0], 3).unwrap().indices, [0, 1, 2]);
        // Same through the heap path.
        let pts = vec![1.0f32; 80];
        let c = line_corpus(&pts, &["a"; 80]);
        let idx = build_index(&c, None).unwrap();
        let got = query(&idx, &[0.0], 40).unwrap();
        assert_eq!(got.indices, (0..40).collect::<Vec<_>>());
    }

    #[test]
    fn argument_errors() {
        let c = line_corpus(&[0.0, 1.0], &["a", "b"]);
        let idx = build_index(&c, None).unwrap();
        assert!(matches!(
            query(&idx, &[0.0, 0.0], 1),
            Err(KnnError::Dim { .. })
        ));
        assert!(matches!(
            query(&idx, &[0.0], 0),
            Err(KnnError::KRange { .. })
        ));
        assert!(matches!(
            query(&idx, &[0.0], 3),
            Err(KnnError::KRange { k: 3, n: 2 })
        ));
        assert!(matches!(
            query(&idx, &[f32::NAN], 1),
            Err(KnnError::NonFinite)
        ));
        assert!(matches!(
            query_batch(&idx, &[0.0, f32::INFINITY], 1, Workers::Single),
            Err(KnnError::Row { row: 1, .. })
        ));
    }

    #[test]
    fn excluding_self() {
        let c = line_corpus(&[0.0, 0.0, 3.0], &["a", "b", "c"]);
        let idx = build_index(&c, None).unwrap();
        assert_eq!(query_excluding(&idx, &[0.0], 2, 0).unwrap().indices, [1, 2]);
        assert!(query_excluding(&idx, &[0.0], 3, 0).is_err());
    }
}
