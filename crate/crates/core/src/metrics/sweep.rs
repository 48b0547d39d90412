use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::protocol::SupportSetting;

/// Macro F1 of one (layer, support setting, seed) run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepResult {
    pub layer: u32,
    pub setting: SupportSetting,
    pub seed: u64,
    pub macro_f1: f64,
}

/// Mean and population standard deviation over seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl CellStats {
    /// Values are summed in the order given.
    pub fn of(values: &[f64]) -> CellStats {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        CellStats {
            mean,
            std: var.sqrt(),
            n,
        }
    }
}

/// Support settings (rows) by layers (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub layers: Vec<u32>,
    pub settings: Vec<SupportSetting>,
    pub seeds: Vec<u64>,
    /// `cells[row][col]`.
    pub cells: Vec<Vec<CellStats>>,
    /// Mean over rows of each column's cell means.
    pub column_means: Vec<f64>,
}

impl SweepTable {
    pub fn cell(&self, setting: SupportSetting, layer: u32) -> Option<&CellStats> {
        let r = self.settings.iter().position(|s| *s == setting)?;
        let c = self.layers.iter().position(|l| *l == layer)?;
        Some(&self.cells[r][c])
    }

    /// Column with the highest mean, lowest layer on ties.
    pub fn best_layer(&self) -> Option<u32> {
        self.column_means
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| self.layers[i])
    }
}

/// Builds the sweep table. Every (layer, setting) cell must carry the same
/// seed multiset; results may arrive in any order.
pub fn aggregate_sweep(results: &[SweepResult]) -> Result<SweepTable, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::Empty("sweep without results"));
    }
    let mut cells: BTreeMap<(SupportSetting, u32), Vec<(u64, f64)>> = BTreeMap::new();
    for r in results {
        if !r.macro_f1.is_finite() {
            return Err(MetricsError::Range(format!(
                "non-finite F1 for layer {}",
                r.layer
            )));
        }
        cells
            .entry((r.setting, r.layer))
            .or_default()
            .push((r.seed, r.macro_f1));
    }
    let layers: Vec<u32> = results
        .iter()
        .map(|r| r.layer)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let settings: Vec<SupportSetting> = results
        .iter()
        .map(|r| r.setting)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut seeds: Option<Vec<u64>> = None;
    let mut table = Vec::with_capacity(settings.len());
    for &s in &settings {
        let mut row = Vec::with_capacity(layers.len());
        for &l in &layers {
            let mut runs = cells.remove(&(s, l)).ok_or_else(|| {
                MetricsError::Coverage(format!("no results for layer {l}, support {s}"))
            })?;
            runs.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            let these: Vec<u64> = runs.iter().map(|r| r.0).collect();
            match &seeds {
                None => seeds = Some(these),
                Some(expected) if *expected != these => {
                    return Err(MetricsError::Coverage(format!(
                        "layer {l}, support {s} has seeds {these:?}, expected {expected:?}"
                    )))
                }
                _ => {}
            }
            let values: Vec<f64> = runs.iter().map(|r| r.1).collect();
            row.push(CellStats::of(&values));
        }
        table.push(row);
    }
    let column_means = (0..layers.len())
        .map(|c| table.iter().map(|row| row[c].mean).sum::<f64>() / table.len() as f64)
        .collect();
    Ok(SweepTable {
        layers,
        settings,
        seeds: seeds.unwrap_or_default(),
        cells: table,
        column_means,
    })
}
