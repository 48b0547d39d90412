//! Training-free source tracing of generated speech.
//!
//! Samples are represented by mean-pooled self-supervised speech features
//! that were extracted ahead of time. Attribution to a generator checkpoint
//! is an exact Euclidean k-nearest-neighbour vote over a labelled support
//! set; samples from unseen generators are flagged when their average
//! distance to the support set exceeds a threshold calibrated at the equal
//! error rate of a validation slice.
//!
//! Module map:
//!
//! - [`store`]: the `EMB1` embedding container, the JSON-Lines manifest and
//!   the joined in-memory [`store::Corpus`].
//! - [`knn`]: exact search, majority vote, batch classification and Hart's
//!   condensed nearest neighbour.
//! - [`protocol`]: seeded, portable data splits.
//! - [`ood`]: distance scoring, EER calibration and decisions.
//! - [`metrics`]: macro F1, neighbour purity, sweep tables and report
//!   rendering.
//! - [`synthetic`]: Gaussian-cluster corpora for tests and demos.

pub mod knn;
pub mod metrics;
pub mod ood;
pub mod protocol;
pub mod rng;
pub mod store;
pub mod synthetic;

pub use knn::{NeighborList, SupportIndex, VoteResult};
pub use store::{Corpus, EmbeddingSet, LabelField, LabelTarget, SampleRecord};

/// Neighbour count used throughout unless overridden.
pub const DEFAULT_K: usize = 21;
