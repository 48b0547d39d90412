use std::io::Write;

use srctrace_core::knn::build_index;
use srctrace_core::metrics::{neighbor_purity, render_purity, NeighborPurityMatrix};
use srctrace_core::store::LabelField;

use crate::config::RunConfig;
use crate::data::{load_corpus, load_records, Outputs};
use crate::error::{CliError, Result};

pub fn run(
    cfg: &RunConfig,
    group_by: Option<LabelField>,
    stdout: &mut dyn Write,
) -> Result<NeighborPurityMatrix> {
    let k = cfg.single_k()?;
    let records = load_records(cfg)?;
    let corpus = load_corpus(cfg, &records, cfg.layer)?;
    let index = build_index(&corpus, None)?;
    let matrix = neighbor_purity(&index, k, cfg.workers)?;
    let out = Outputs::new(&cfg.output)?;
    let rendered = render_purity(&matrix)?;
    rendered.write_to(out.dir(), "purity")?;
    write!(stdout, "{}", rendered.text).map_err(|e| CliError::io("<stdout>", e))?;

    if let Some(field) = group_by.or(cfg.group_by) {
        // Each class goes to the group of its first sample.
        let mut group_of = Vec::with_capacity(matrix.classes.len());
        for class in &matrix.classes {
            let c = corpus
                .classes()
                .index_of(class)
                .expect("matrix class is a corpus class");
            let row = (0..corpus.len())
                .find(|&r| corpus.label(r) == c)
                .expect("class has samples");
            let g = field.value(corpus.record(row)).ok_or_else(|| {
                CliError::Data(format!(
                    "sample {} has no {field}",
                    corpus.record(row).sample_id
                ))
            })?;
            group_of.push(g.to_string());
        }
        let grouped = render_purity(&matrix.grouped(&group_of))?;
        grouped.write_to(out.dir(), &format!("purity_by_{field}"))?;
        write!(stdout, "\n{}", grouped.text).map_err(|e| CliError::io("<stdout>", e))?;
    }
    Ok(matrix)
}
