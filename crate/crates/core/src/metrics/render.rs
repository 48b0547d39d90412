//! Text and CSV renderings of reports. Output bytes depend only on the
//! report, so reruns overwrite files with identical content.
//!
//! CSV numbers use Rust's shortest round-trip float formatting; text tables
//! use four decimals and `mean±std` with the population standard deviation.

use std::fmt::Write as _;
use std::path::Path;

use super::{CellStats, F1Report, MetricsError, NeighborPurityMatrix, ScoreTable, SweepTable};
use crate::protocol::SupportSetting;

/// Rendered artifacts of one report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendered {
    pub text: String,
    pub csv: String,
    pub json: Option<String>,
}

impl Rendered {
    /// Writes `<stem>.txt`, `<stem>.csv` and, when present, `<stem>.json`.
    pub fn write_to(&self, dir: impl AsRef<Path>, stem: &str) -> Result<(), MetricsError> {
        let dir = dir.as_ref();
        let write = |ext: &str, body: &str| {
            let path = dir.join(format!("{stem}.{ext}"));
            std::fs::write(&path, body).map_err(|source| MetricsError::Io { path, source })
        };
        write("txt", &self.text)?;
        write("csv", &self.csv)?;
        if let Some(json) = &self.json {
            write("json", json)?;
        }
        Ok(())
    }
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for row in rows {
        w.write_record(&row).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

fn pm(c: &CellStats) -> String {
    format!("{:.4}±{:.4}", c.mean, c.std)
}

/// Left column padded to `first`, the rest right-aligned to `width`.
fn text_table(first: usize, width: usize, header: &[String], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    let line = |cells: &[String]| {
        let mut s = format!("{:<first$}", cells[0]);
        for c in &cells[1..] {
            let pad = width.saturating_sub(c.chars().count());
            s += &format!(" {}{}", " ".repeat(pad), c);
        }
        s.trim_end().to_string()
    };
    writeln!(out, "{}", line(header)).unwrap();
    writeln!(
        out,
        "{}",
        "-".repeat(first + (width + 1) * (header.len() - 1))
    )
    .unwrap();
    for r in rows {
        writeln!(out, "{}", line(r)).unwrap();
    }
    out
}

const MACRO_ROW: &str = "<macro>";

pub fn render_f1(report: &F1Report, class_names: &[String]) -> Rendered {
    let name = |c: u32| {
        class_names
            .get(c as usize)
            .cloned()
            .unwrap_or_else(|| c.to_string())
    };
    let mut rows: Vec<Vec<String>> = report
        .per_class_f1
        .iter()
        .map(|(&c, f)| {
            vec![
                name(c),
                f.to_string(),
                report.support_counts[&c].to_string(),
            ]
        })
        .collect();
    let total: usize = report.support_counts.values().sum();
    rows.push(vec![
        MACRO_ROW.into(),
        report.macro_f1.to_string(),
        total.to_string(),
    ]);
    let csv = csv_string(&["class", "f1", "support"], rows.clone());

    let first = rows
        .iter()
        .map(|r| r[0].chars().count())
        .max()
        .unwrap_or(5)
        .max(5);
    let text_rows: Vec<Vec<String>> = report
        .per_class_f1
        .iter()
        .map(|(&c, f)| {
            vec![
                name(c),
                format!("{f:.4}"),
                report.support_counts[&c].to_string(),
            ]
        })
        .collect();
    let mut text = format!(
        "macro F1 {:.4} over {} classes, {} samples\n\n",
        report.macro_f1,
        report.per_class_f1.len(),
        total
    );
    text += &text_table(
        first,
        8,
        &["class".into(), "f1".into(), "support".into()],
        &text_rows,
    );
    Rendered {
        text,
        csv,
        json: None,
    }
}

/// (class, f1, support) row of an F1 report.
pub type F1Row = (String, f64, usize);

/// Parses [`render_f1`] CSV into per-class rows and the macro F1.
pub fn read_f1_csv(text: &str) -> Result<(Vec<F1Row>, f64), MetricsError> {
    let mut rows = Vec::new();
    let mut macro_f1 = None;
    for rec in csv::Reader::from_reader(text.as_bytes()).records() {
        let rec = rec.map_err(MetricsError::csv)?;
        let f1: f64 = rec[1].parse().map_err(MetricsError::csv)?;
        let n: usize = rec[2].parse().map_err(MetricsError::csv)?;
        if &rec[0] == MACRO_ROW {
            macro_f1 = Some(f1);
        } else {
            rows.push((rec[0].to_string(), f1, n));
        }
    }
    let macro_f1 = macro_f1.ok_or_else(|| MetricsError::Parse("missing macro row".into()))?;
    Ok((rows, macro_f1))
}

const AVERAGE_ROW: &str = "average";

pub fn render_sweep(table: &SweepTable) -> Rendered {
    let seeds = table
        .seeds
        .iter()
        .map(u64::to_string)
        .collect::<Vec<_>>()
        .join(";");
    let mut rows = Vec::new();
    for (s, row) in table.settings.iter().zip(&table.cells) {
        for (l, c) in table.layers.iter().zip(row) {
            rows.push(vec![
                s.to_string(),
                l.to_string(),
                c.mean.to_string(),
                c.std.to_string(),
                c.n.to_string(),
                seeds.clone(),
            ]);
        }
    }
    for (l, m) in table.layers.iter().zip(&table.column_means) {
        rows.push(vec![
            AVERAGE_ROW.into(),
            l.to_string(),
            m.to_string(),
            String::new(),
            String::new(),
            String::new(),
        ]);
    }
    let csv = csv_string(&["support", "layer", "mean", "std", "n", "seeds"], rows);

    let mut header = vec!["support".to_string()];
    header.extend(table.layers.iter().map(|l| format!("L{l}")));
    let mut text_rows: Vec<Vec<String>> = table
        .settings
        .iter()
        .zip(&table.cells)
        .map(|(s, row)| {
            std::iter::once(s.to_string())
                .chain(row.iter().map(pm))
                .collect()
        })
        .collect();
    text_rows.push(
        std::iter::once(AVERAGE_ROW.to_string())
            .chain(table.column_means.iter().map(|m| format!("{m:.4}")))
            .collect(),
    );
    let mut text = format!(
        "macro F1, mean±std (population) over seeds [{}]\n\n",
        table
            .seeds
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(", ")
    );
    text += &text_table(10, 13, &header, &text_rows);
    if let Some(best) = table.best_layer() {
        writeln!(text, "\nbest layer by average: {best}").unwrap();
    }
    Rendered {
        text,
        csv,
        json: None,
    }
}

/// Parses [`render_sweep`] CSV back into a table.
pub fn read_sweep_csv(text: &str) -> Result<SweepTable, MetricsError> {
    let mut cells: Vec<(SupportSetting, u32, CellStats)> = Vec::new();
    let mut means: Vec<(u32, f64)> = Vec::new();
    let mut seeds = Vec::new();
    for rec in csv::Reader::from_reader(text.as_bytes()).records() {
        let rec = rec.map_err(MetricsError::csv)?;
        let layer: u32 = rec[1].parse().map_err(MetricsError::csv)?;
        let mean: f64 = rec[2].parse().map_err(MetricsError::csv)?;
        if &rec[0] == AVERAGE_ROW {
            means.push((layer, mean));
            continue;
        }
        let setting: SupportSetting = rec[0]
            .parse()
            .map_err(|e| MetricsError::Parse(format!("{e}")))?;
        let std: f64 = rec[3].parse().map_err(MetricsError::csv)?;
        let n: usize = rec[4].parse().map_err(MetricsError::csv)?;
        seeds = rec[5]
            .split(';')
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(MetricsError::csv)?;
        cells.push((setting, layer, CellStats { mean, std, n }));
    }
    let mut layers: Vec<u32> = means.iter().map(|m| m.0).collect();
    layers.dedup();
    let mut settings: Vec<SupportSetting> = cells.iter().map(|c| c.0).collect();
    settings.dedup();
    if cells.len() != layers.len() * settings.len() {
        return Err(MetricsError::Parse("sweep CSV is not a full grid".into()));
    }
    let grid = cells
        .chunks(layers.len())
        .map(|row| row.iter().map(|c| c.2).collect())
        .collect();
    Ok(SweepTable {
        layers,
        settings,
        seeds,
        cells: grid,
        column_means: means.into_iter().map(|m| m.1).collect(),
    })
}

/// Fractions as CSV (rows are source classes), a text summary of each
/// class's non-target share, and the full matrix as JSON.
pub fn render_purity(m: &NeighborPurityMatrix) -> Result<Rendered, MetricsError> {
    if m.is_empty() {
        return Err(MetricsError::Empty("purity matrix without classes"));
    }
    let mut header = vec!["source"];
    header.extend(m.classes.iter().map(String::as_str));
    let rows = m.classes.iter().zip(&m.fraction).map(|(c, row)| {
        std::iter::once(c.clone())
            .chain(row.iter().map(f64::to_string))
            .collect()
    });
    let csv = csv_string(&header, rows);

    let first = m
        .classes
        .iter()
        .map(|c| c.chars().count())
        .max()
        .unwrap_or(5)
        .max(6);
    let text_rows: Vec<Vec<String>> = (0..m.classes.len())
        .map(|i| {
            let worst = (0..m.classes.len())
                .filter(|&j| j != i && m.counts[i][j] > 0)
                .max_by(|&a, &b| m.counts[i][a].cmp(&m.counts[i][b]).then(b.cmp(&a)));
            vec![
                m.classes[i].clone(),
                m.samples[i].to_string(),
                format!("{:.4}", m.non_target(i)),
                worst
                    .map(|j| format!("{} ({:.4})", m.classes[j], m.fraction[i][j]))
                    .unwrap_or_else(|| "-".into()),
            ]
        })
        .collect();
    let mut text = format!(
        "share of the {} nearest neighbours from another class\n\n",
        m.k
    );
    text += &text_table(
        first,
        10,
        &[
            "class".into(),
            "samples".into(),
            "non-target".into(),
            "top confusion".into(),
        ],
        &text_rows,
    );
    let json = serde_json::to_string_pretty(m).expect("matrix serializes") + "\n";
    Ok(Rendered {
        text,
        csv,
        json: Some(json),
    })
}

pub fn render_table(t: &ScoreTable) -> Rendered {
    let mut rows = Vec::new();
    for (r, row) in t.rows.iter().zip(&t.cells) {
        for (c, cell) in t.cols.iter().zip(row) {
            if let Some(s) = cell {
                rows.push(vec![
                    r.clone(),
                    c.clone(),
                    s.mean.to_string(),
                    s.std.to_string(),
                    s.n.to_string(),
                ]);
            }
        }
    }
    let csv = csv_string(&["row", "col", "mean", "std", "n"], rows);
    let mut header = vec![String::new()];
    header.extend(t.cols.iter().cloned());
    let text_rows: Vec<Vec<String>> = t
        .rows
        .iter()
        .zip(&t.cells)
        .map(|(r, row)| {
            std::iter::once(r.clone())
                .chain(
                    row.iter()
                        .map(|c| c.as_ref().map(pm).unwrap_or_else(|| "n/a".into())),
                )
                .collect()
        })
        .collect();
    let first = t
        .rows
        .iter()
        .map(|r| r.chars().count())
        .max()
        .unwrap_or(4)
        .max(4);
    let mut text = format!("{}, mean±std (population) over seeds\n\n", t.title);
    text += &text_table(first, 13, &header, &text_rows);
    Rendered {
        text,
        csv,
        json: None,
    }
}
