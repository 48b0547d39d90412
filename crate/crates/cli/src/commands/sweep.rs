use std::io::Write;

use srctrace_core::knn::{build_index, classify_batch};
use srctrace_core::metrics::{
    aggregate_sweep, macro_f1, render_sweep, MetricsError, SweepResult, SweepTable,
};
use srctrace_core::protocol::Role;

use crate::config::RunConfig;
use crate::data::{gather, load_corpus, load_records, Outputs};
use crate::error::{CliError, Result};

pub fn run(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<SweepTable> {
    let k = cfg.single_k()?;
    if cfg.layers.len() > 1 && !cfg.layer_pattern() {
        return Err(CliError::Usage(
            "sweeping several layers needs an embeddings pattern with `{layer}`".into(),
        ));
    }
    if cfg.protocol.is_some() {
        return Err(CliError::Usage(
            "sweep draws its own splits; --protocol is not supported".into(),
        ));
    }
    let missing: Vec<String> = cfg
        .layers
        .iter()
        .filter(|&&l| !cfg.embeddings_for(l).is_file())
        .map(|&l| format!("layer {l} ({})", cfg.embeddings_for(l).display()))
        .collect();
    if !missing.is_empty() {
        return Err(MetricsError::Coverage(format!(
            "no embedding file for {}",
            missing.join(", ")
        ))
        .into());
    }

    let records = load_records(cfg)?;
    let mut results = Vec::new();
    for &layer in &cfg.layers {
        let corpus = load_corpus(cfg, &records, layer)?;
        for setting in &cfg.support {
            for &seed in &cfg.seeds {
                let split = setting.split(&corpus, seed)?;
                let support = split.rows(Role::Support);
                let test = split.rows(Role::Test);
                if test.is_empty() {
                    return Err(CliError::Data(format!(
                        "support setting {setting} leaves no test samples (seed {seed})"
                    )));
                }
                let index = build_index(&corpus, Some(&support))?;
                if k > index.len() {
                    return Err(CliError::Data(format!(
                        "support setting {setting} keeps {} samples, fewer than k = {k}",
                        index.len()
                    )));
                }
                let votes = classify_batch(&index, &gather(&corpus, &test), k, cfg.workers)?;
                let truth: Vec<u32> = test.iter().map(|&r| corpus.label(r)).collect();
                let pred: Vec<u32> = votes.iter().map(|v| v.predicted_class).collect();
                results.push(SweepResult {
                    layer,
                    setting: *setting,
                    seed,
                    macro_f1: macro_f1(&truth, &pred)?.macro_f1,
                });
            }
        }
    }
    let table = aggregate_sweep(&results)?;
    let rendered = render_sweep(&table);
    let out = Outputs::new(&cfg.output)?;
    rendered.write_to(out.dir(), "sweep")?;
    write!(stdout, "{}", rendered.text).map_err(|e| CliError::io("<stdout>", e))?;
    Ok(table)
}
