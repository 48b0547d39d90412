use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Write;

use srctrace_core::store::{
    build_corpus, load_embeddings, load_manifest, write_embeddings, write_manifest, EmbeddingSet,
    SampleRecord,
};

use crate::args::IngestArgs;
use crate::config::parse_target;
use crate::data::{csv_text, Outputs};
use crate::error::{CliError, Result};

#[derive(Default)]
struct DatasetCounts {
    languages: BTreeSet<String>,
    checkpoints: BTreeSet<String>,
    speakers: BTreeSet<String>,
    samples: usize,
}

fn count(set: &BTreeSet<String>) -> String {
    if set.is_empty() {
        "n/a".into()
    } else {
        set.len().to_string()
    }
}

/// Per-dataset counts: (dataset, languages, checkpoints, speakers, samples),
/// plus a total row.
pub fn summary_rows(records: &[SampleRecord]) -> Vec<Vec<String>> {
    let mut by: BTreeMap<&str, DatasetCounts> = BTreeMap::new();
    let mut total = DatasetCounts::default();
    for r in records {
        for c in [by.entry(&r.dataset).or_default(), &mut total] {
            c.checkpoints.insert(r.checkpoint.clone());
            c.languages.extend(r.language.clone());
            c.speakers.extend(r.speaker.clone());
            c.samples += 1;
        }
    }
    by.into_iter()
        .map(|(d, c)| (d.to_string(), c))
        .chain(std::iter::once(("total".to_string(), total)))
        .map(|(d, c)| {
            vec![
                d,
                count(&c.languages),
                c.checkpoints.len().to_string(),
                count(&c.speakers),
                c.samples.to_string(),
            ]
        })
        .collect()
}

const HEADER: [&str; 5] = ["dataset", "languages", "checkpoints", "speakers", "samples"];

pub fn run(args: &IngestArgs, stdout: &mut dyn Write) -> Result<Vec<SampleRecord>> {
    if args.manifest.len() != args.embeddings.len() {
        return Err(CliError::Usage(format!(
            "{} manifest(s) but {} embedding file(s); pass one of each per shard",
            args.manifest.len(),
            args.embeddings.len()
        )));
    }
    let target = parse_target(&args.target, std::path::Path::new(""))?;
    let mut records: Vec<SampleRecord> = Vec::new();
    let mut data: Vec<f32> = Vec::new();
    let mut first: Option<EmbeddingSet> = None;
    let mut seen = HashSet::new();
    let mut lines = String::new();
    for (m, e) in args.manifest.iter().zip(&args.embeddings) {
        let recs = load_manifest(m)?;
        let set = load_embeddings(e)?;
        let corpus = build_corpus(recs.clone(), set.clone(), target.clone())?;
        lines += &format!(
            "{}: {} samples, {} classes, extractor `{}` layer {} dim {}\n",
            e.display(),
            corpus.len(),
            corpus.classes().len(),
            set.extractor_id(),
            set.layer_index(),
            set.dim()
        );
        if let Some(f) = &first {
            if (f.extractor_id(), f.layer_index(), f.dim())
                != (set.extractor_id(), set.layer_index(), set.dim())
            {
                return Err(CliError::Data(format!(
                    "{}: extractor, layer or dim differs from {}",
                    e.display(),
                    args.embeddings[0].display()
                )));
            }
        }
        for r in &recs {
            if !seen.insert(r.sample_id.clone()) {
                return Err(CliError::Data(format!(
                    "sample `{}` appears in more than one shard",
                    r.sample_id
                )));
            }
        }
        data.extend_from_slice(set.as_slice());
        first.get_or_insert(set);
        records.extend(recs);
    }

    let rows = summary_rows(&records);
    let mut text = lines + "\n";
    text += &format!(
        "{:<16} {:>9} {:>11} {:>9} {:>9}\n",
        HEADER[0], HEADER[1], HEADER[2], HEADER[3], HEADER[4]
    );
    for r in &rows {
        text += &format!(
            "{:<16} {:>9} {:>11} {:>9} {:>9}\n",
            r[0], r[1], r[2], r[3], r[4]
        );
    }
    write!(stdout, "{text}").map_err(|e| CliError::io("<stdout>", e))?;
    if let Some(dir) = &args.out {
        let out = Outputs::new(dir)?;
        out.write("ingest.csv", &csv_text(&HEADER, rows))?;
        out.write("ingest.txt", &text)?;
    }
    if let Some(dir) = &args.merge {
        let first = first.expect("at least one shard");
        let merged =
            EmbeddingSet::new(first.extractor_id(), first.layer_index(), first.dim(), data)?;
        let out = Outputs::new(dir)?;
        let stem: String = first
            .extractor_id()
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        write_manifest(&records, out.dir().join("manifest.jsonl"))?;
        write_embeddings(
            &merged,
            out.dir()
                .join(format!("{stem}_{}.emb", first.layer_index())),
        )?;
    }
    Ok(records)
}
