//! Records joined with embeddings under one attribution target.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{EmbeddingSet, SampleRecord, StoreError};

/// A label column of the manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelField {
    Dataset,
    Checkpoint,
    AcousticModel,
    Vocoder,
    Speaker,
    Language,
}

impl LabelField {
    pub fn name(self) -> &'static str {
        match self {
            LabelField::Dataset => "dataset",
            LabelField::Checkpoint => "checkpoint",
            LabelField::AcousticModel => "acoustic_model",
            LabelField::Vocoder => "vocoder",
            LabelField::Speaker => "speaker",
            LabelField::Language => "language",
        }
    }

    pub fn value(self, record: &SampleRecord) -> Option<&str> {
        match self {
            LabelField::Dataset => Some(&record.dataset),
            LabelField::Checkpoint => Some(&record.checkpoint),
            LabelField::AcousticModel => record.acoustic_model.as_deref(),
            LabelField::Vocoder => record.vocoder.as_deref(),
            LabelField::Speaker => record.speaker.as_deref(),
            LabelField::Language => record.language.as_deref(),
        }
    }
}

impl fmt::Display for LabelField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LabelField {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "dataset" => LabelField::Dataset,
            "checkpoint" => LabelField::Checkpoint,
            "acoustic_model" => LabelField::AcousticModel,
            "vocoder" => LabelField::Vocoder,
            "speaker" => LabelField::Speaker,
            "language" => LabelField::Language,
            other => return Err(StoreError::UnknownField(other.to_string())),
        })
    }
}

/// Explicit label overrides.
///
/// A sample-level entry wins over a checkpoint-level one. Samples covered by
/// neither keep their checkpoint when `keep_unmapped` is set and are
/// otherwise rejected.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelabelMap {
    #[serde(default)]
    pub checkpoint: BTreeMap<String, String>,
    #[serde(default)]
    pub sample: BTreeMap<String, String>,
    #[serde(default)]
    pub keep_unmapped: bool,
}

impl RelabelMap {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| StoreError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| StoreError::Schema {
            line: e.line(),
            message: e.to_string(),
        })
    }

    fn label<'a>(&'a self, record: &'a SampleRecord) -> Option<&'a str> {
        self.sample
            .get(&record.sample_id)
            .or_else(|| self.checkpoint.get(&record.checkpoint))
            .map(String::as_str)
            .or(self.keep_unmapped.then_some(record.checkpoint.as_str()))
    }
}

/// What a corpus is classified by.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelTarget {
    Field(LabelField),
    /// Several fields joined with `|`, e.g. checkpoint+speaker+language to
    /// give each speaker identity of a multi-speaker model its own class.
    Composite(Vec<LabelField>),
    Relabel(RelabelMap),
}

impl LabelTarget {
    pub fn checkpoint() -> Self {
        LabelTarget::Field(LabelField::Checkpoint)
    }

    /// Label of `record` under this target, `None` when it cannot be formed.
    pub fn label(&self, record: &SampleRecord) -> Option<String> {
        match self {
            LabelTarget::Field(f) => f.value(record).map(str::to_string),
            LabelTarget::Composite(fields) => {
                let parts: Option<Vec<&str>> = fields.iter().map(|f| f.value(record)).collect();
                parts.map(|p| p.join("|"))
            }
            LabelTarget::Relabel(map) => map.label(record).map(str::to_string),
        }
    }

    /// Parses `field`, `field+field+...` or `relabel:<path>`.
    pub fn parse(spec: &str) -> Result<Self, StoreError> {
        if let Some(path) = spec.strip_prefix("relabel:") {
            return Ok(LabelTarget::Relabel(RelabelMap::load(path)?));
        }
        let fields = spec
            .split('+')
            .map(str::parse)
            .collect::<Result<Vec<LabelField>, _>>()?;
        Ok(match fields.as_slice() {
            [single] => LabelTarget::Field(*single),
            _ => LabelTarget::Composite(fields),
        })
    }

    pub fn describe(&self) -> String {
        match self {
            LabelTarget::Field(f) => f.name().to_string(),
            LabelTarget::Composite(fs) => fs.iter().map(|f| f.name()).collect::<Vec<_>>().join("+"),
            LabelTarget::Relabel(_) => "relabel".to_string(),
        }
    }
}

/// Sorted, deduplicated label strings; position is the class index.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassMap {
    names: Vec<String>,
}

impl ClassMap {
    pub fn from_labels<'a>(labels: impl IntoIterator<Item = &'a str>) -> Self {
        let set: BTreeSet<&str> = labels.into_iter().collect();
        Self {
            names: set.into_iter().map(str::to_string).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<u32> {
        self.names
            .binary_search_by(|n| n.as_str().cmp(name))
            .ok()
            .map(|i| i as u32)
    }

    pub fn name(&self, class: u32) -> &str {
        &self.names[class as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Samples aligned row-for-row with an embedding matrix, each carrying a
/// class index under the current target.
///
/// Cloning is cheap: records and embeddings are shared.
#[derive(Debug, Clone)]
pub struct Corpus {
    records: Arc<[SampleRecord]>,
    embeddings: Arc<EmbeddingSet>,
    target: LabelTarget,
    classes: ClassMap,
    labels: Vec<u32>,
}

/// Joins records with embeddings by position and assigns class indices.
pub fn build_corpus(
    records: Vec<SampleRecord>,
    embeddings: EmbeddingSet,
    target: LabelTarget,
) -> Result<Corpus, StoreError> {
    if records.len() != embeddings.count() {
        return Err(StoreError::Alignment {
            records: records.len(),
            rows: embeddings.count(),
        });
    }
    Corpus::assemble(records.into(), Arc::new(embeddings), target)
}

impl Corpus {
    fn assemble(
        records: Arc<[SampleRecord]>,
        embeddings: Arc<EmbeddingSet>,
        target: LabelTarget,
    ) -> Result<Self, StoreError> {
        let mut raw = Vec::with_capacity(records.len());
        let mut missing = Vec::new();
        for r in records.iter() {
            match target.label(r) {
                Some(l) => raw.push(l),
                None => missing.push(r.sample_id.clone()),
            }
        }
        if !missing.is_empty() {
            return Err(StoreError::Label {
                target: target.describe(),
                sample_ids: missing,
            });
        }
        let classes = ClassMap::from_labels(raw.iter().map(String::as_str));
        let labels = raw
            .iter()
            .map(|l| classes.index_of(l).expect("label is in its own class map"))
            .collect();
        Ok(Self {
            records,
            embeddings,
            target,
            classes,
            labels,
        })
    }

    /// Same samples and embeddings, classified by another target.
    pub fn with_target(&self, target: LabelTarget) -> Result<Corpus, StoreError> {
        Self::assemble(self.records.clone(), self.embeddings.clone(), target)
    }

    /// Same samples and labels over another embedding file (e.g. a different layer).
    pub fn with_embeddings(&self, embeddings: EmbeddingSet) -> Result<Corpus, StoreError> {
        if embeddings.count() != self.records.len() {
            return Err(StoreError::Alignment {
                records: self.records.len(),
                rows: embeddings.count(),
            });
        }
        Ok(Corpus {
            embeddings: Arc::new(embeddings),
            ..self.clone()
        })
    }

    /// Keeps only the given rows, in the given order, and re-derives classes.
    pub fn subset(&self, rows: &[usize]) -> Result<Corpus, StoreError> {
        let records: Vec<SampleRecord> = rows.iter().map(|&r| self.records[r].clone()).collect();
        Self::assemble(
            records.into(),
            Arc::new(self.embeddings.select(rows)),
            self.target.clone(),
        )
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.dim()
    }

    pub fn records(&self) -> &[SampleRecord] {
        &self.records
    }

    pub fn record(&self, row: usize) -> &SampleRecord {
        &self.records[row]
    }

    pub fn embeddings(&self) -> &EmbeddingSet {
        &self.embeddings
    }

    pub fn vector(&self, row: usize) -> &[f32] {
        self.embeddings.row(row)
    }

    pub fn target(&self) -> &LabelTarget {
        &self.target
    }

    pub fn classes(&self) -> &ClassMap {
        &self.classes
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, row: usize) -> u32 {
        self.labels[row]
    }

    /// Row positions grouped by the value of `field`, keys sorted.
    /// Rows lacking the field are returned separately.
    pub fn group_rows(&self, field: LabelField) -> (BTreeMap<String, Vec<usize>>, Vec<usize>) {
        let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut missing = Vec::new();
        for (i, r) in self.records.iter().enumerate() {
            match field.value(r) {
                Some(v) => groups.entry(v.to_string()).or_default().push(i),
                None => missing.push(i),
            }
        }
        (groups, missing)
    }

    /// Row positions per class index.
    pub fn rows_by_class(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.classes.len()];
        for (i, &c) in self.labels.iter().enumerate() {
            out[c as usize].push(i);
        }
        out
    }

    /// Position of each sample id.
    pub fn row_of_ids(&self) -> HashMap<&str, usize> {
        self.records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.sample_id.as_str(), i))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records(ckpts: &[&str]) -> Vec<SampleRecord> {
        ckpts
            .iter()
            .enumerate()
            .map(|(i, c)| SampleRecord::new(format!("s{i}"), "d", *c))
            .collect()
    }

    fn emb(rows: usize) -> EmbeddingSet {
        EmbeddingSet::new("t", 0, 2, (0..rows * 2).map(|v| v as f32).collect()).unwrap()
    }

    #[test]
    fn lexicographic_classes() {
        let c = build_corpus(records(&["B", "A", "A"]), emb(3), LabelTarget::checkpoint()).unwrap();
        assert_eq!(c.classes().names(), ["A", "B"]);
        assert_eq!(c.labels(), [1, 0, 0]);
    }

    #[test]
    fn label_mapping_ignores_record_order() {
        let a = build_corpus(
            records(&["z", "m", "a", "m"]),
            emb(4),
            LabelTarget::checkpoint(),
        )
        .unwrap();
        let b = build_corpus(
            records(&["m", "a", "z", "m"]),
            emb(4),
            LabelTarget::checkpoint(),
        )
        .unwrap();
        assert_eq!(a.classes(), b.classes());
    }

    #[test]
    fn relabel_merges_checkpoints() {
        let mut map = RelabelMap::default();
        map.checkpoint.insert("ckpt1".into(), "merged".into());
        map.checkpoint.insert("ckpt2".into(), "merged".into());
        let c = build_corpus(
            records(&["ckpt1", "ckpt2"]),
            emb(2),
            LabelTarget::Relabel(map),
        )
        .unwrap();
        assert_eq!(c.classes().len(), 1);
        assert_eq!(c.labels(), [0, 0]);
    }

    #[test]
    fn relabel_sample_entry_wins() {
        let mut map = RelabelMap {
            keep_unmapped: true,
            ..Default::default()
        };
        map.checkpoint.insert("a".into(), "x".into());
        map.sample.insert("s1".into(), "y".into());
        let c = build_corpus(records(&["a", "a", "b"]), emb(3), LabelTarget::Relabel(map)).unwrap();
        assert_eq!(c.classes().names(), ["b", "x", "y"]);
        assert_eq!(c.labels(), [1, 2, 0]);
    }

    #[test]
    fn unmapped_relabel_is_rejected() {
        let map = RelabelMap::default();
        assert!(matches!(
            build_corpus(records(&["a"]), emb(1), LabelTarget::Relabel(map)),
            Err(StoreError::Label { .. })
        ));
    }

    #[test]
    fn misaligned_rows() {
        assert!(matches!(
            build_corpus(records(&["a", "b", "c"]), emb(2), LabelTarget::checkpoint()),
            Err(StoreError::Alignment {
                records: 3,
                rows: 2
            })
        ));
    }

    #[test]
    fn missing_target_lists_samples() {
        let mut recs = records(&["a", "b", "c"]);
        recs[1].vocoder = Some("hifigan".into());
        match build_corpus(recs, emb(3), LabelTarget::Field(LabelField::Vocoder)) {
            Err(StoreError::Label { sample_ids, .. }) => assert_eq!(sample_ids, ["s0", "s2"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn composite_target() {
        let mut recs = records(&["vits", "vits"]);
        recs[0].speaker = Some("p1".into());
        recs[0].language = Some("en".into());
        recs[1].speaker = Some("p2".into());
        recs[1].language = Some("en".into());
        let t = LabelTarget::parse("checkpoint+speaker+language").unwrap();
        let c = build_corpus(recs, emb(2), t).unwrap();
        assert_eq!(c.classes().names(), ["vits|p1|en", "vits|p2|en"]);
    }

    #[test]
    fn parse_targets() {
        assert_eq!(
            LabelTarget::parse("vocoder").unwrap(),
            LabelTarget::Field(LabelField::Vocoder)
        );
        assert!(LabelTarget::parse("colour").is_err());
    }

    #[test]
    fn subset_preserves_order() {
        let c = build_corpus(records(&["a", "b", "c"]), emb(3), LabelTarget::checkpoint()).unwrap();
        let s = c.subset(&[2, 0]).unwrap();
        assert_eq!(s.record(0).sample_id, "s2");
        assert_eq!(s.vector(0), c.vector(2));
        assert_eq!(s.classes().names(), ["a", "c"]);
    }
}
