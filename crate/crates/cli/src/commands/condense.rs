use std::io::Write;

use srctrace_core::knn::{build_index, condense, consistency_failures, write_snapshot};
use srctrace_core::protocol::Role;

use crate::config::RunConfig;
use crate::data::{csv_text, load_corpus, load_records, Outputs};
use crate::error::{CliError, Result};

pub struct CondenseResult {
    pub seed: u64,
    pub original: usize,
    pub condensed: usize,
    pub passes: usize,
    pub failures: usize,
}

/// Condenses the whole corpus, or the support rows of `--protocol`, once
/// per seed and writes each result as an index snapshot.
pub fn run(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<Vec<CondenseResult>> {
    let records = load_records(cfg)?;
    let corpus = load_corpus(cfg, &records, cfg.layer)?;
    let selection = match &cfg.protocol {
        Some(path) => Some(
            srctrace_core::protocol::SplitAssignment::read(path)?
                .align(&corpus)?
                .rows(Role::Support),
        ),
        None => None,
    };
    let index = build_index(&corpus, selection.as_deref())?;
    let out = Outputs::new(&cfg.output)?;
    let mut results = Vec::new();
    for &seed in &cfg.seeds {
        let reduced = condense(&index, seed);
        let failures = consistency_failures(&index, &reduced);
        write_snapshot(&reduced, out.dir().join(format!("condensed_seed{seed}")))?;
        let passes = reduced.provenance().map(|p| p.passes).unwrap_or(0);
        results.push(CondenseResult {
            seed,
            original: index.len(),
            condensed: reduced.len(),
            passes,
            failures: failures.len(),
        });
    }
    let rows = results.iter().map(|r| {
        vec![
            r.seed.to_string(),
            r.original.to_string(),
            r.condensed.to_string(),
            r.passes.to_string(),
            r.failures.to_string(),
        ]
    });
    out.write(
        "condense_summary.csv",
        &csv_text(
            &[
                "seed",
                "original",
                "condensed",
                "passes",
                "consistency_failures",
            ],
            rows,
        ),
    )?;
    let mut text = String::from("condensed nearest neighbour\n\n");
    for r in &results {
        text += &format!(
            "seed {}: {} -> {} samples ({:.1}%), {} passes, {} rows misclassified by 1-NN\n",
            r.seed,
            r.original,
            r.condensed,
            100.0 * r.condensed as f64 / r.original as f64,
            r.passes,
            r.failures
        );
    }
    out.write("condense_summary.txt", &text)?;
    write!(stdout, "{text}").map_err(|e| CliError::io("<stdout>", e))?;
    Ok(results)
}
