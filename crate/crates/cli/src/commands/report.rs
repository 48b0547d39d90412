use std::io::Write;
use std::path::Path;

use srctrace_core::metrics::{read_f1_csv, read_sweep_csv, render_sweep};

use crate::data::Outputs;
use crate::error::{CliError, Result};

pub const REPORT_FILE: &str = "report.txt";

/// Text artifacts in the order they appear in the summary.
const SECTIONS: [&str; 6] = [
    "ingest",
    "attribute_summary",
    "sweep",
    "ood_table",
    "ood_eer",
    "condense_summary",
];

fn read(path: &Path) -> Result<Option<String>> {
    match std::fs::read_to_string(path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(CliError::io(path, e)),
    }
}

/// Gathers the text reports of a run directory into `report.txt`. CSV
/// files that have a reader are parsed first, so a damaged artifact fails
/// the report instead of being copied through.
pub fn run(dir: &Path, stdout: &mut dyn Write) -> Result<String> {
    if !dir.is_dir() {
        return Err(CliError::Data(format!(
            "{} is not a directory",
            dir.display()
        )));
    }
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .collect();
    names.sort();

    let mut body = String::new();
    let mut section = |title: &str, text: &str| {
        body += &format!("== {title}\n\n{}", text);
        if !text.ends_with('\n') {
            body.push('\n');
        }
        body.push('\n');
    };
    for stem in SECTIONS {
        if stem == "sweep" {
            if let Some(csv) = read(&dir.join("sweep.csv"))? {
                let table = read_sweep_csv(&csv)?;
                section("sweep", &render_sweep(&table).text);
            }
            continue;
        }
        if let Some(text) = read(&dir.join(format!("{stem}.txt")))? {
            section(stem, &text);
        }
    }
    for name in names
        .iter()
        .filter(|n| n.starts_with("attribute_seed") && n.ends_with(".csv"))
    {
        let csv = read(&dir.join(name))?.unwrap_or_default();
        let (rows, macro_f1) = read_f1_csv(&csv)?;
        let worst = rows
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|r| format!(", lowest {} ({:.4})", r.0, r.1))
            .unwrap_or_default();
        section(
            name.trim_end_matches(".csv"),
            &format!(
                "macro F1 {macro_f1:.4} over {} classes{worst}\n",
                rows.len()
            ),
        );
    }
    for name in names
        .iter()
        .filter(|n| n.starts_with("purity") && n.ends_with(".txt"))
    {
        let text = read(&dir.join(name))?.unwrap_or_default();
        section(name.trim_end_matches(".txt"), &text);
    }
    if body.is_empty() {
        return Err(CliError::Data(format!(
            "{} holds no reports",
            dir.display()
        )));
    }
    Outputs::new(dir)?.write(REPORT_FILE, &body)?;
    write!(stdout, "{body}").map_err(|e| CliError::io("<stdout>", e))?;
    Ok(body)
}
