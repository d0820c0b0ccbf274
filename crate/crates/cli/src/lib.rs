//! Command-line pipeline: ingest, discover, metrics, partition, correlate,
//! train, synth and report, each writing one directory of plain artifacts.

pub mod app;
pub mod config;
pub mod fsio;
pub mod stages;
