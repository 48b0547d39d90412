use std::io::Write;

use srctrace_core::knn::{build_index, classify_batch};
use srctrace_core::metrics::{macro_f1, render_f1, CellStats};
use srctrace_core::protocol::{Role, SplitAssignment, SplitKind};
use srctrace_core::store::Corpus;

use crate::config::RunConfig;
use crate::data::{assignments, csv_text, gather, load_corpus, load_records, Outputs};
use crate::error::{CliError, Result};

/// Outcome of one attribution run.
pub struct SeedResult {
    pub seed: u64,
    pub macro_f1: f64,
    pub support: usize,
    pub test: usize,
}

/// Fits on the support rows of `split`, classifies its test rows and
/// writes the F1 report, the predictions and the split itself.
fn run_split(
    corpus: &Corpus,
    split: &SplitAssignment,
    k: usize,
    cfg: &RunConfig,
    out: &Outputs,
) -> Result<SeedResult> {
    let seed = split.spec.seed;
    let support = split.rows(Role::Support);
    let test = split.rows(Role::Test);
    if test.is_empty() {
        return Err(CliError::Data(format!(
            "seed {seed}: the split has no test samples"
        )));
    }
    let index = build_index(corpus, Some(&support))?;
    if k > index.len() {
        return Err(CliError::Data(format!(
            "k = {k} exceeds the {} support samples",
            index.len()
        )));
    }
    let votes = classify_batch(&index, &gather(corpus, &test), k, cfg.workers)?;
    let truth: Vec<u32> = test.iter().map(|&r| corpus.label(r)).collect();
    let predicted: Vec<u32> = votes.iter().map(|v| v.predicted_class).collect();
    let report = macro_f1(&truth, &predicted)?;

    let names = corpus.classes().names();
    render_f1(&report, names).write_to(out.dir(), &format!("attribute_seed{seed}"))?;
    let rows = test.iter().zip(&votes).map(|(&r, v)| {
        vec![
            corpus.record(r).sample_id.clone(),
            names[corpus.label(r) as usize].clone(),
            names[v.predicted_class as usize].clone(),
            v.mean_distance.to_string(),
        ]
    });
    out.write(
        &format!("predictions_seed{seed}.csv"),
        &csv_text(&["sample_id", "truth", "predicted", "mean_distance"], rows),
    )?;
    out.write(
        &format!("splits/attribute_seed{seed}.jsonl"),
        &split.to_jsonl(),
    )?;
    Ok(SeedResult {
        seed,
        macro_f1: report.macro_f1,
        support: support.len(),
        test: test.len(),
    })
}

pub fn summary_files(results: &[SeedResult], target: &str, k: usize) -> (String, String) {
    let rows = results.iter().map(|r| {
        vec![
            r.seed.to_string(),
            r.macro_f1.to_string(),
            r.support.to_string(),
            r.test.to_string(),
        ]
    });
    let csv = csv_text(&["seed", "macro_f1", "support", "test"], rows);
    let stats = CellStats::of(&results.iter().map(|r| r.macro_f1).collect::<Vec<_>>());
    let mut text = format!("attribution by {target}, k = {k}\n\n");
    text += &format!(
        "{:>12} {:>10} {:>9} {:>9}\n",
        "seed", "macro F1", "support", "test"
    );
    for r in results {
        text += &format!(
            "{:>12} {:>10.4} {:>9} {:>9}\n",
            r.seed, r.macro_f1, r.support, r.test
        );
    }
    text += &format!(
        "\nmean±std (population) {:.4}±{:.4} over {} seed(s)\n",
        stats.mean, stats.std, stats.n
    );
    (csv, text)
}

pub fn run(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<Vec<SeedResult>> {
    let k = cfg.single_k()?;
    let records = load_records(cfg)?;
    let corpus = load_corpus(cfg, &records, cfg.layer)?;
    let kind = match &cfg.split {
        Some(s) => s.to_kind(&cfg.target, &cfg.base)?,
        None => SplitKind::RatioSplit {
            ratios: vec![0.8, 0.2],
            stratify_by: cfg.target.clone(),
        },
    };
    let out = Outputs::new(&cfg.output)?;
    let mut results = Vec::new();
    for split in assignments(cfg, &corpus, &kind)? {
        results.push(run_split(&corpus, &split, k, cfg, &out)?);
    }
    let (csv, text) = summary_files(&results, &cfg.target.describe(), k);
    out.write("attribute_summary.csv", &csv)?;
    out.write("attribute_summary.txt", &text)?;
    write!(stdout, "{text}").map_err(|e| CliError::io("<stdout>", e))?;
    Ok(results)
}
