//! JSON-Lines sample manifest.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::StoreError;

/// Labels of one generated audio sample.
///
/// Optional fields are `None` when absent from the manifest. Empty strings
/// and JSON `null` are read as absent too.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: String,
    pub dataset: String,
    pub checkpoint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acoustic_model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocoder: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
}

impl SampleRecord {
    pub fn new(
        sample_id: impl Into<String>,
        dataset: impl Into<String>,
        checkpoint: impl Into<String>,
    ) -> Self {
        Self {
            sample_id: sample_id.into(),
            dataset: dataset.into(),
            checkpoint: checkpoint.into(),
            acoustic_model: None,
            vocoder: None,
            speaker: None,
            language: None,
        }
    }

    fn normalize(mut self) -> Self {
        for field in [
            &mut self.acoustic_model,
            &mut self.vocoder,
            &mut self.speaker,
            &mut self.language,
        ] {
            if field.as_deref() == Some("") {
                *field = None;
            }
        }
        self
    }
}

/// Parses manifest text. Blank lines are skipped; line numbers are 1-based.
pub fn parse_manifest(reader: impl BufRead) -> Result<Vec<SampleRecord>, StoreError> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| StoreError::Schema {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SampleRecord = serde_json::from_str(&line).map_err(|e| StoreError::Schema {
            line: line_no,
            message: e.to_string(),
        })?;
        let record = record.normalize();
        for (name, value) in [
            ("sample_id", &record.sample_id),
            ("dataset", &record.dataset),
            ("checkpoint", &record.checkpoint),
        ] {
            if value.is_empty() {
                return Err(StoreError::Schema {
                    line: line_no,
                    message: format!("field `{name}` is empty"),
                });
            }
        }
        if !seen.insert(record.sample_id.clone()) {
            return Err(StoreError::Duplicate {
                line: line_no,
                sample_id: record.sample_id,
            });
        }
        records.push(record);
    }
    Ok(records)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<SampleRecord>, StoreError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| StoreError::io(path, e))?;
    parse_manifest(BufReader::new(file))
}

pub fn write_manifest(records: &[SampleRecord], path: impl AsRef<Path>) -> Result<(), StoreError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| StoreError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).expect("records serialize");
        writeln!(w, "{line}").map_err(|e| StoreError::io(path, e))?;
    }
    w.flush().map_err(|e| StoreError::io(path, e))
}
