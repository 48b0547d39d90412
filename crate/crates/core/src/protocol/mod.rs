//! Seeded, portable data splits.
//!
//! Every split is a pure function of the corpus and a [`SplitSpec`]. Random
//! choices come from [`crate::rng::SplitRng`], strata are visited in sorted
//! label order and members are shuffled starting from ascending row order,
//! so the same inputs give byte-identical assignments on every platform.

mod assignment;
mod splits;

use thiserror::Error;

use crate::store::StoreError;

pub use assignment::{Role, SplitAssignment};
pub use splits::{
    largest_remainder, leave_n_out, ood_holdout, per_class_support, ratio_split, HoldoutCount,
    SplitKind, SplitSpec, SupportSetting, DEFAULT_OOD_RATIOS,
};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("stratum `{stratum}` has {size} member(s), needs at least {needed}")]
    Stratum {
        stratum: String,
        size: usize,
        needed: usize,
    },
    #[error("out of range: {0}")]
    Range(String),
    #[error("invalid split parameters: {0}")]
    Params(String),
    #[error("protocol line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("protocol does not match corpus: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}
