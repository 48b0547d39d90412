//! On-disk formats and the in-memory corpus.
//!
//! Embeddings and labels live in separate files joined by position: one
//! `EMB1` matrix per (extractor, layer) and one JSON-Lines manifest shared
//! by all layers.

mod corpus;
mod embeddings;
mod manifest;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use corpus::{build_corpus, ClassMap, Corpus, LabelField, LabelTarget, RelabelMap};
pub use embeddings::{load_embeddings, write_embeddings, EmbeddingSet, HEADER_LEN, MAGIC};
pub use manifest::{load_manifest, parse_manifest, write_manifest, SampleRecord};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("truncated embedding file: expected {expected} bytes, found {actual}")]
    Truncation { expected: u64, actual: u64 },
    #[error("non-finite value in embedding row {row}")]
    Data { row: usize },
    #[error("line {line}: duplicate sample_id `{sample_id}`")]
    Duplicate { line: usize, sample_id: String },
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("manifest has {records} records but embeddings have {rows} rows")]
    Alignment { records: usize, rows: usize },
    #[error("{} sample(s) lack a `{target}` label: {}", sample_ids.len(), preview(sample_ids))]
    Label {
        target: String,
        sample_ids: Vec<String>,
    },
    #[error("unknown label field `{0}`")]
    UnknownField(String),
}

impl StoreError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        StoreError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

fn preview(ids: &[String]) -> String {
    const SHOWN: usize = 10;
    let mut s = ids
        .iter()
        .take(SHOWN)
        .cloned()
        .collect::<Vec<_>>()
        .join(", ");
    if ids.len() > SHOWN {
        s += &format!(", ... ({} more)", ids.len() - SHOWN);
    }
    s
}
