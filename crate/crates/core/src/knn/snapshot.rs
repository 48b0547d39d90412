//! Index snapshots: an `EMB1` matrix, a sidecar of `u32` LE class indices
//! (`<stem>.labels`) and a JSON sidecar with class names and sample ids
//! (`<stem>.meta.json`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CondenseProvenance, KnnError, SupportIndex};
use crate::store::{load_embeddings, write_embeddings, ClassMap, EmbeddingSet, StoreError};

#[derive(Serialize, Deserialize)]
struct Meta {
    classes: ClassMap,
    sample_ids: Vec<String>,
    source_rows: Vec<usize>,
    provenance: Option<CondenseProvenance>,
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

pub fn write_snapshot(index: &SupportIndex, stem: impl AsRef<Path>) -> Result<(), KnnError> {
    let stem = stem.as_ref();
    let set = EmbeddingSet::new(
        index.extractor_id.clone(),
        index.layer_index,
        index.dim,
        index.vectors.clone(),
    )?;
    write_embeddings(&set, with_ext(stem, ".emb"))?;

    let labels: Vec<u8> = index
        .class_of
        .iter()
        .flat_map(|c| c.to_le_bytes())
        .collect();
    let path = with_ext(stem, ".labels");
    std::fs::write(&path, labels).map_err(|e| StoreError::io(&path, e))?;

    let meta = Meta {
        classes: index.classes.clone(),
        sample_ids: index.sample_ids.clone(),
        source_rows: index.source_rows.clone(),
        provenance: index.provenance.clone(),
    };
    let path = with_ext(stem, ".meta.json");
    let text = serde_json::to_string_pretty(&meta).expect("meta serializes");
    std::fs::write(&path, text + "\n").map_err(|e| StoreError::io(&path, e))?;
    Ok(())
}

pub fn read_snapshot(stem: impl AsRef<Path>) -> Result<SupportIndex, KnnError> {
    let stem = stem.as_ref();
    let set = load_embeddings(with_ext(stem, ".emb"))?;

    let path = with_ext(stem, ".labels");
    let raw = std::fs::read(&path).map_err(|e| StoreError::io(&path, e))?;
    if raw.len() != set.count() * 4 {
        return Err(StoreError::Truncation {
            expected: set.count() as u64 * 4,
            actual: raw.len() as u64,
        }
        .into());
    }
    let class_of: Vec<u32> = raw
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();

    let path = with_ext(stem, ".meta.json");
    let text = std::fs::read_to_string(&path).map_err(|e| StoreError::io(&path, e))?;
    let meta: Meta = serde_json::from_str(&text).map_err(|e| StoreError::Schema {
        line: e.line(),
        message: e.to_string(),
    })?;
    if meta.source_rows.len() != class_of.len() {
        return Err(StoreError::Alignment {
            records: meta.source_rows.len(),
            rows: class_of.len(),
        }
        .into());
    }

    let mut index = SupportIndex::from_parts(
        set.dim(),
        set.as_slice().to_vec(),
        class_of,
        meta.sample_ids,
        meta.classes,
    )?;
    index.source_rows = meta.source_rows;
    index.provenance = meta.provenance;
    index.extractor_id = set.extractor_id().to_string();
    index.layer_index = set.layer_index();
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::super::tests::line_corpus;
    use super::super::*;

    #[test]
    fn snapshot_round_trip() {
        let c = line_corpus(&[0.0, 1.0, 2.0, 10.0], &["a", "a", "b", "b"]);
        let idx = condense(&build_index(&c, None).unwrap(), 4);
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("index");
        write_snapshot(&idx, &stem).unwrap();
        let labels = std::fs::read(dir.path().join("index.labels")).unwrap();
        assert_eq!(labels.len(), idx.len() * 4);
        let back = read_snapshot(&stem).unwrap();
        assert_eq!(back.vectors(), idx.vectors());
        assert_eq!(back.labels(), idx.labels());
        assert_eq!(back.sample_ids(), idx.sample_ids());
        assert_eq!(back.source_rows(), idx.source_rows());
        assert_eq!(back.provenance(), idx.provenance());
    }
}
