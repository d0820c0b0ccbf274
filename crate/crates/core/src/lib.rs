//! Process mining and analytics over IDE event logs.
//!
//! The crate is organised as a pipeline:
//!
//! ```text
//! raw events > eventlog (parse, verify, dedup) > EventLog
//!            > discovery (hierarchical transition systems) > ProcessModel
//!            > metrics (process metrics, command frequencies, product deltas) > FeatureTable
//!            > stats (Spearman, k-means, level partitions)
//!            > learn (trees, forests, logistic, k-NN, CV, importance)
//! ```
//!
//! `synth` generates deterministic scenarios with ground truth that exercise
//! every stage end to end.

pub mod discovery;
pub mod error;
pub mod eventlog;
pub mod learn;
pub mod metrics;
pub mod seed;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
