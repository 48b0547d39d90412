use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ProtocolError, SplitSpec};
use crate::store::{Corpus, StoreError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Support,
    Validation,
    Test,
    Excluded,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Support => "support",
            Role::Validation => "validation",
            Role::Test => "test",
            Role::Excluded => "excluded",
        })
    }
}

/// One role per corpus sample plus the spec that produced it.
///
/// `held_out` lists checkpoint labels withheld from support (OOD holdout and
/// leave-N-out); it is empty for ratio and per-class splits.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitAssignment {
    pub spec: SplitSpec,
    pub held_out: Vec<String>,
    sample_ids: Vec<String>,
    roles: Vec<Role>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    split_spec: SplitSpec,
    held_out: Vec<String>,
    samples: usize,
}

#[derive(Serialize, Deserialize)]
struct Line<'a> {
    sample_id: std::borrow::Cow<'a, str>,
    role: Role,
}

impl SplitAssignment {
    pub(crate) fn new(
        spec: SplitSpec,
        corpus: &Corpus,
        roles: Vec<Role>,
        mut held_out: Vec<String>,
    ) -> Self {
        debug_assert_eq!(roles.len(), corpus.len());
        held_out.sort();
        Self {
            spec,
            held_out,
            sample_ids: corpus
                .records()
                .iter()
                .map(|r| r.sample_id.clone())
                .collect(),
            roles,
        }
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn role(&self, row: usize) -> Role {
        self.roles[row]
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    /// Corpus rows holding `role`, ascending.
    pub fn rows(&self, role: Role) -> Vec<usize> {
        self.roles
            .iter()
            .enumerate()
            .filter(|(_, r)| **r == role)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn count(&self, role: Role) -> usize {
        self.roles.iter().filter(|r| **r == role).count()
    }

    pub fn is_held_out(&self, checkpoint: &str) -> bool {
        self.held_out
            .binary_search_by(|h| h.as_str().cmp(checkpoint))
            .is_ok()
    }

    /// Roles reordered to follow `corpus` rows, matched by sample id.
    pub fn align(&self, corpus: &Corpus) -> Result<SplitAssignment, ProtocolError> {
        if corpus.len() != self.len() {
            return Err(ProtocolError::Mismatch(format!(
                "{} samples in protocol, {} in corpus",
                self.len(),
                corpus.len()
            )));
        }
        let rows = corpus.row_of_ids();
        let mut roles = vec![Role::Excluded; corpus.len()];
        for (id, role) in self.sample_ids.iter().zip(&self.roles) {
            let row = rows
                .get(id.as_str())
                .ok_or_else(|| ProtocolError::Mismatch(format!("unknown sample_id `{id}`")))?;
            roles[*row] = *role;
        }
        Ok(SplitAssignment::new(
            self.spec.clone(),
            corpus,
            roles,
            self.held_out.clone(),
        ))
    }

    /// JSON-Lines: a header with the spec, then `{sample_id, role}` per sample.
    pub fn to_jsonl(&self) -> String {
        let header = Header {
            split_spec: self.spec.clone(),
            held_out: self.held_out.clone(),
            samples: self.len(),
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for (id, role) in self.sample_ids.iter().zip(&self.roles) {
            let line = Line {
                sample_id: id.into(),
                role: *role,
            };
            out += &serde_json::to_string(&line).expect("line serializes");
            out.push('\n');
        }
        out
    }

    pub fn parse_jsonl(reader: impl BufRead) -> Result<Self, ProtocolError> {
        let mut lines = reader
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true));
        let parse_err = |line: usize, e: &dyn fmt::Display| ProtocolError::Parse {
            line: line + 1,
            message: e.to_string(),
        };
        let (n, first) = lines.next().ok_or(ProtocolError::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let first = first.map_err(|e| parse_err(n, &e))?;
        let header: Header = serde_json::from_str(&first).map_err(|e| parse_err(n, &e))?;

        let mut sample_ids = Vec::with_capacity(header.samples);
        let mut roles = Vec::with_capacity(header.samples);
        let mut seen = HashSet::new();
        for (n, text) in lines {
            let text = text.map_err(|e| parse_err(n, &e))?;
            let line: Line = serde_json::from_str(&text).map_err(|e| parse_err(n, &e))?;
            if !seen.insert(line.sample_id.to_string()) {
                return Err(parse_err(
                    n,
                    &format!("duplicate sample_id `{}`", line.sample_id),
                ));
            }
            sample_ids.push(line.sample_id.into_owned());
            roles.push(line.role);
        }
        if roles.len() != header.samples {
            return Err(ProtocolError::Parse {
                line: roles.len() + 1,
                message: format!(
                    "header declares {} samples, found {}",
                    header.samples,
                    roles.len()
                ),
            });
        }
        Ok(Self {
            spec: header.split_spec,
            held_out: header.held_out,
            sample_ids,
            roles,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), ProtocolError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_jsonl()).map_err(|e| StoreError::io(path, e).into())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, ProtocolError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| StoreError::io(path, e))?;
        Self::parse_jsonl(std::io::BufReader::new(file))
    }
}
