use std::path::{Path, PathBuf};

use srctrace_core::protocol::{SplitAssignment, SplitKind, SplitSpec};
use srctrace_core::store::{
    build_corpus, load_embeddings, load_manifest, Corpus, SampleRecord, StoreError,
};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// Manifest rows kept by the dataset filter, with their original positions.
pub struct Records {
    /// Rows in the unfiltered manifest.
    pub total: usize,
    pub rows: Vec<usize>,
    pub records: Vec<SampleRecord>,
}

pub fn load_records(cfg: &RunConfig) -> Result<Records> {
    let all = load_manifest(&cfg.manifest)?;
    let total = all.len();
    if cfg.datasets.is_empty() {
        return Ok(Records {
            total,
            rows: (0..total).collect(),
            records: all,
        });
    }
    for d in &cfg.datasets {
        if !all.iter().any(|r| &r.dataset == d) {
            return Err(CliError::Data(format!(
                "dataset `{d}` does not occur in {}",
                cfg.manifest.display()
            )));
        }
    }
    let (rows, records) = all
        .into_iter()
        .enumerate()
        .filter(|(_, r)| cfg.datasets.contains(&r.dataset))
        .unzip();
    Ok(Records {
        total,
        rows,
        records,
    })
}

/// Corpus over the embedding file of `layer`.
pub fn load_corpus(cfg: &RunConfig, records: &Records, layer: u32) -> Result<Corpus> {
    let path = cfg.embeddings_for(layer);
    let set = load_embeddings(&path)?;
    if set.count() != records.total {
        return Err(StoreError::Alignment {
            records: records.total,
            rows: set.count(),
        }
        .into());
    }
    let set = if cfg.datasets.is_empty() {
        set
    } else {
        set.select(&records.rows)
    };
    Ok(build_corpus(
        records.records.clone(),
        set,
        cfg.target.clone(),
    )?)
}

/// Row-major copy of the given corpus rows.
pub fn gather(corpus: &Corpus, rows: &[usize]) -> Vec<f32> {
    let mut out = Vec::with_capacity(rows.len() * corpus.dim());
    for &r in rows {
        out.extend_from_slice(corpus.vector(r));
    }
    out
}

/// Splits of one command: generated per seed, or a frozen assignment.
pub fn assignments(
    cfg: &RunConfig,
    corpus: &Corpus,
    kind: &SplitKind,
) -> Result<Vec<SplitAssignment>> {
    match &cfg.protocol {
        Some(path) => Ok(vec![SplitAssignment::read(path)?.align(corpus)?]),
        None => cfg
            .seeds
            .iter()
            .map(|&seed| {
                Ok(SplitSpec {
                    kind: kind.clone(),
                    seed,
                }
                .apply(corpus)?)
            })
            .collect(),
    }
}

/// Output directory; created on first write. Every file is rewritten whole.
pub struct Outputs {
    dir: PathBuf,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        std::fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

/// CSV text from a header and rows.
pub fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}
