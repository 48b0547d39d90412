//! Macro F1, neighbour purity, sweep tables and report rendering.

mod f1;
mod purity;
mod render;
mod sweep;
mod table;

use std::path::PathBuf;

use thiserror::Error;

pub use f1::{binary_f1, macro_f1, ClassCounts, ConfusionMatrix, F1Report};
pub use purity::{neighbor_purity, NeighborPurityMatrix};
pub use render::{
    read_f1_csv, read_sweep_csv, render_f1, render_purity, render_sweep, render_table, F1Row,
    Rendered,
};
pub use sweep::{aggregate_sweep, CellStats, SweepResult, SweepTable};
pub use table::{GridResult, ScoreTable};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("{truth} truth labels but {predicted} predictions")]
    Alignment { truth: usize, predicted: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("class {class} outside 0..{n_classes}")]
    ClassRange { class: u32, n_classes: usize },
    #[error("out of range: {0}")]
    Range(String),
    #[error("incomplete coverage: {0}")]
    Coverage(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl MetricsError {
    fn csv(e: impl std::fmt::Display) -> Self {
        MetricsError::Parse(e.to_string())
    }
}
