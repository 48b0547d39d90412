//! One detector per (seed, k), calibrated on the validation slice and
//! applied to the test slice. Per-dataset scores pit each dataset's OOD
//! test samples against all in-domain test samples.

use std::collections::BTreeSet;
use std::io::Write;

use srctrace_core::knn::build_index;
use srctrace_core::metrics::{binary_f1, render_table, GridResult, ScoreTable};
use srctrace_core::ood::{
    calibrate, decide, score_batch, ErrorRates, OodCalibration, OodScore, ValidationCounts,
};
use srctrace_core::protocol::{Role, SplitAssignment, SplitKind};
use srctrace_core::store::Corpus;

use crate::config::{RunConfig, SplitSection};
use crate::data::{assignments, csv_text, gather, load_corpus, load_records, Outputs};
use crate::error::{CliError, Result};

pub const ALL: &str = "All";

/// Detector used when no checkpoint is held out: nothing is ever flagged.
fn open_detector(k: usize, in_domain: usize) -> OodCalibration {
    OodCalibration {
        threshold: f64::INFINITY,
        k,
        eer: 0.0,
        rates: ErrorRates { far: 0.0, frr: 0.0 },
        counts: ValidationCounts { in_domain, ood: 0 },
        spec_provenance: None,
    }
}

pub struct OodRun {
    pub f1: ScoreTable,
    pub eer: ScoreTable,
    pub calibrations: Vec<OodCalibration>,
}

fn scores(
    corpus: &Corpus,
    index: &srctrace_core::knn::SupportIndex,
    rows: &[usize],
    k: usize,
    cfg: &RunConfig,
) -> Result<Vec<f64>> {
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    Ok(score_batch(index, &gather(corpus, rows), k, cfg.workers)?)
}

fn run_split(
    corpus: &Corpus,
    split: &SplitAssignment,
    cfg: &RunConfig,
    out: &Outputs,
    f1s: &mut Vec<GridResult>,
    eers: &mut Vec<GridResult>,
    cals: &mut Vec<OodCalibration>,
) -> Result<()> {
    let seed = split.spec.seed;
    let index = build_index(corpus, Some(&split.rows(Role::Support)))?;
    let held = |r: usize| split.is_held_out(&corpus.record(r).checkpoint);
    let (val_ood, val_in): (Vec<usize>, Vec<usize>) = split
        .rows(Role::Validation)
        .into_iter()
        .partition(|&r| held(r));
    let test = split.rows(Role::Test);
    if test.is_empty() {
        return Err(CliError::Data(format!(
            "seed {seed}: the split has no test samples"
        )));
    }
    if !split.held_out.is_empty() && val_ood.is_empty() {
        return Err(CliError::Data(format!(
            "seed {seed}: no held-out checkpoint reached validation; hold out at least 2 per dataset"
        )));
    }
    if val_in.is_empty() && !val_ood.is_empty() {
        return Err(CliError::Data(format!(
            "seed {seed}: no in-domain validation samples"
        )));
    }
    out.write(&format!("splits/ood_seed{seed}.jsonl"), &split.to_jsonl())?;

    let truth: Vec<bool> = test.iter().map(|&r| held(r)).collect();
    let datasets: BTreeSet<&str> = test
        .iter()
        .map(|&r| corpus.record(r).dataset.as_str())
        .collect();
    for &k in &cfg.k {
        if k > index.len() {
            return Err(CliError::Data(format!(
                "k = {k} exceeds the {} support samples",
                index.len()
            )));
        }
        let mut cal = if val_ood.is_empty() {
            open_detector(k, val_in.len())
        } else {
            calibrate(
                &scores(corpus, &index, &val_in, k, cfg)?,
                &scores(corpus, &index, &val_ood, k, cfg)?,
                k,
            )?
        };
        cal.spec_provenance = Some(split.spec.clone());
        out.write(
            &format!("ood_calibration_k{k}_seed{seed}.json"),
            &cal.to_json(),
        )?;

        let test_scores = scores(corpus, &index, &test, k, cfg)?;
        let decisions: Vec<_> = test
            .iter()
            .zip(&test_scores)
            .map(|(&r, &s)| {
                decide(
                    &cal,
                    &OodScore {
                        sample_id: corpus.record(r).sample_id.clone(),
                        mean_distance: s,
                    },
                )
            })
            .collect();
        let rows = test
            .iter()
            .zip(&decisions)
            .zip(&truth)
            .map(|((&r, d), &t)| {
                let rec = corpus.record(r);
                vec![
                    d.sample_id.clone(),
                    rec.dataset.clone(),
                    rec.checkpoint.clone(),
                    t.to_string(),
                    d.is_ood.to_string(),
                    d.mean_distance.to_string(),
                    d.margin.to_string(),
                ]
            });
        out.write(
            &format!("ood_decisions_k{k}_seed{seed}.csv"),
            &csv_text(
                &[
                    "sample_id",
                    "dataset",
                    "checkpoint",
                    "ood",
                    "flagged",
                    "mean_distance",
                    "margin",
                ],
                rows,
            ),
        )?;

        let flagged: Vec<bool> = decisions.iter().map(|d| d.is_ood).collect();
        // F1 is undefined without OOD samples; such cells stay empty.
        let mut push = |col: &str, keep: &dyn Fn(usize) -> bool| -> Result<()> {
            let idx: Vec<usize> = (0..test.len()).filter(|&i| keep(i)).collect();
            if idx.iter().any(|&i| truth[i]) {
                let t: Vec<bool> = idx.iter().map(|&i| truth[i]).collect();
                let p: Vec<bool> = idx.iter().map(|&i| flagged[i]).collect();
                f1s.push(GridResult {
                    row: k.to_string(),
                    col: col.into(),
                    seed,
                    value: binary_f1(&t, &p)?,
                });
            }
            Ok(())
        };
        push(ALL, &|_| true)?;
        for d in &datasets {
            push(d, &|i| !truth[i] || corpus.record(test[i]).dataset == *d)?;
        }
        if !val_ood.is_empty() {
            eers.push(GridResult {
                row: k.to_string(),
                col: ALL.into(),
                seed,
                value: cal.eer,
            });
        }
        cals.push(cal);
    }
    Ok(())
}

pub fn run(cfg: &RunConfig, per_dataset: Option<usize>, stdout: &mut dyn Write) -> Result<OodRun> {
    let records = load_records(cfg)?;
    let corpus = load_corpus(cfg, &records, cfg.layer)?;
    let section = match (per_dataset.or(cfg.per_dataset), &cfg.split) {
        (Some(n), Some(s)) if s.kind == "ood_holdout" => {
            let mut s = s.clone();
            s.per_dataset = Some(n);
            s
        }
        (Some(n), _) => SplitSection::ood(n),
        (None, Some(s)) => s.clone(),
        (None, None) => {
            return Err(CliError::Usage(
                "ood needs --per-dataset or an ood_holdout [split]".into(),
            ))
        }
    };
    let kind = section.to_kind(&cfg.target, &cfg.base)?;
    if !matches!(kind, SplitKind::OodHoldout { .. }) {
        return Err(CliError::Usage(format!(
            "ood needs an ood_holdout split, not `{}`",
            section.kind
        )));
    }
    let out = Outputs::new(&cfg.output)?;
    let (mut f1s, mut eers, mut cals) = (Vec::new(), Vec::new(), Vec::new());
    for split in assignments(cfg, &corpus, &kind)? {
        run_split(&corpus, &split, cfg, &out, &mut f1s, &mut eers, &mut cals)?;
    }

    let mut cols: Vec<String> = vec![ALL.into()];
    let datasets: BTreeSet<&str> = corpus
        .records()
        .iter()
        .map(|r| r.dataset.as_str())
        .collect();
    cols.extend(datasets.into_iter().map(str::to_string));
    let rows: Vec<String> = cfg.k.iter().map(usize::to_string).collect();
    let f1 = ScoreTable::aggregate("OOD F1 (OOD positive) by k", rows.clone(), cols, &f1s)?;
    let eer = ScoreTable::aggregate("validation EER by k", rows, vec![ALL.into()], &eers)?;
    let (rf1, reer) = (render_table(&f1), render_table(&eer));
    rf1.write_to(out.dir(), "ood_table")?;
    reer.write_to(out.dir(), "ood_eer")?;
    write!(stdout, "{}\n{}", rf1.text, reer.text).map_err(|e| CliError::io("<stdout>", e))?;
    Ok(OodRun {
        f1,
        eer,
        calibrations: cals,
    })
}
