use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CellStats, MetricsError};

/// One value of a labelled grid, e.g. OOD F1 of (k, dataset) for a seed.
#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub row: String,
    pub col: String,
    pub seed: u64,
    pub value: f64,
}

/// Labelled grid of per-seed statistics. Cells without results are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub title: String,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub cells: Vec<Vec<Option<CellStats>>>,
}

impl ScoreTable {
    /// Aggregates results into the given row and column order. Values of a
    /// cell are sorted by seed before summing, so input order is irrelevant.
    pub fn aggregate(
        title: impl Into<String>,
        rows: Vec<String>,
        cols: Vec<String>,
        results: &[GridResult],
    ) -> Result<ScoreTable, MetricsError> {
        let mut by_cell: BTreeMap<(usize, usize), Vec<(u64, f64)>> = BTreeMap::new();
        for r in results {
            let ri = rows.iter().position(|x| *x == r.row);
            let ci = cols.iter().position(|x| *x == r.col);
            match (ri, ci) {
                (Some(ri), Some(ci)) => {
                    by_cell.entry((ri, ci)).or_default().push((r.seed, r.value))
                }
                _ => {
                    return Err(MetricsError::Coverage(format!(
                        "result for ({}, {}) outside the table",
                        r.row, r.col
                    )))
                }
            }
        }
        let cells = (0..rows.len())
            .map(|ri| {
                (0..cols.len())
                    .map(|ci| {
                        by_cell.get_mut(&(ri, ci)).map(|v| {
                            v.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
                            CellStats::of(&v.iter().map(|x| x.1).collect::<Vec<_>>())
                        })
                    })
                    .collect()
            })
            .collect();
        Ok(ScoreTable {
            title: title.into(),
            rows,
            cols,
            cells,
        })
    }

    pub fn cell(&self, row: &str, col: &str) -> Option<&CellStats> {
        let r = self.rows.iter().position(|x| x == row)?;
        let c = self.cols.iter().position(|x| x == col)?;
        self.cells[r][c].as_ref()
    }
}
